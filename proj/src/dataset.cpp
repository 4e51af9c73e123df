#include "safdr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "safdr/errors.hpp"
#include "safdr/rng.hpp"

namespace safdr {

namespace {

constexpr double kConstantSigmaTol = 1e-12;

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool is_missing_token(const std::string& s) {
    return s.empty() || s == "?" || s == "NA" || s == "na" || s == "NaN" || s == "nan" ||
           s == "NULL" || s == "null";
}

// Returns false for missing/unparseable cells; value is NaN for missing,
// throws ValidationError for genuinely non-numeric content.
bool parse_cell(const std::string& raw, const std::string& column, int line_no, double* value) {
    const std::string s = trim(raw);
    if (is_missing_token(s)) {
        *value = std::numeric_limits<double>::quiet_NaN();
        return false;
    }
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ValidationError("non-numeric value '" + s + "' in column '" + column + "' at line " +
                              std::to_string(line_no));
    }
    if (!std::isfinite(v)) {
        *value = std::numeric_limits<double>::quiet_NaN();
        return false;
    }
    *value = v;
    return true;
}

// Per-class stratified draw: for each class pull `count` indices off the
// front of its shuffled pool into `taken`, the rest into `left`.
void take_per_class(const std::vector<std::vector<int>>& pools, const std::vector<int>& counts,
                    std::vector<int>* taken, std::vector<int>* left) {
    for (std::size_t c = 0; c < pools.size(); ++c) {
        const auto& pool = pools[c];
        for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
            if (i < counts[c]) {
                taken->push_back(pool[static_cast<std::size_t>(i)]);
            } else {
                left->push_back(pool[static_cast<std::size_t>(i)]);
            }
        }
    }
    std::sort(taken->begin(), taken->end());
    std::sort(left->begin(), left->end());
}

int rounded_share(int class_count, double fraction) {
    return static_cast<int>(std::floor(static_cast<double>(class_count) * fraction + 0.5));
}

}  // namespace

Dataset make_dataset(Eigen::MatrixXd samples, std::vector<int> labels,
                     std::vector<std::string> feature_names, LabelMapping mapping) {
    const auto n = samples.rows();
    const auto k = samples.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw ValidationError("label count does not match sample count");
    }
    if (static_cast<Eigen::Index>(feature_names.size()) != k) {
        throw ValidationError("feature name count does not match feature count");
    }
    {
        std::set<std::string> seen;
        for (const auto& name : feature_names) {
            if (!seen.insert(name).second) {
                throw ValidationError("duplicate feature name '" + name + "'");
            }
        }
    }
    if (!samples.allFinite()) {
        throw ValidationError("dataset contains non-finite values");
    }

    Dataset data;
    data.samples = std::move(samples);
    data.labels = std::move(labels);
    data.feature_names = std::move(feature_names);
    data.label_mapping = std::move(mapping);
    for (int y : data.labels) {
        if (y == 0) {
            ++data.count_class0;
        } else if (y == 1) {
            ++data.count_class1;
        } else {
            throw ValidationError("labels must be 0 or 1");
        }
    }
    if (data.count_class0 < 2 || data.count_class1 < 2) {
        throw ValidationError("each class needs at least 2 samples (got " +
                              std::to_string(data.count_class0) + " and " +
                              std::to_string(data.count_class1) + ")");
    }
    return data;
}

Dataset load_csv(const std::string& path, const std::string& target_column, bool drop_missing) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty file '" + path + "'");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);
    int target_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == target_column) target_col = static_cast<int>(j);
    }
    if (target_col < 0) {
        throw ValidationError("target column '" + target_column + "' not found in header");
    }

    std::vector<std::string> feature_names;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (static_cast<int>(j) != target_col) feature_names.push_back(header[j]);
    }

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_targets;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw ValidationError("line " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        }
        std::vector<double> row(feature_names.size());
        bool missing = false;
        int out = 0;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (static_cast<int>(j) == target_col) continue;
            double v = 0.0;
            if (!parse_cell(cells[j], header[j], line_no, &v)) missing = true;
            row[static_cast<std::size_t>(out++)] = v;
        }
        const std::string target = trim(cells[static_cast<std::size_t>(target_col)]);
        if (is_missing_token(target)) missing = true;
        if (missing) {
            if (drop_missing) continue;
            throw ValidationError("missing value at line " + std::to_string(line_no) +
                                  " (pass drop_missing to skip such rows)");
        }
        rows.push_back(std::move(row));
        raw_targets.push_back(target);
    }

    if (rows.empty()) throw ValidationError("no usable rows in '" + path + "'");

    std::set<std::string> classes(raw_targets.begin(), raw_targets.end());
    if (classes.size() != 2) {
        throw ValidationError("binary target required: column '" + target_column + "' has " +
                              std::to_string(classes.size()) + " distinct values");
    }
    LabelMapping mapping;
    mapping.class0 = *classes.begin();
    mapping.class1 = *std::next(classes.begin());

    Eigen::MatrixXd samples(static_cast<Eigen::Index>(rows.size()),
                            static_cast<Eigen::Index>(feature_names.size()));
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        labels[i] = raw_targets[i] == mapping.class1 ? 1 : 0;
    }
    return make_dataset(std::move(samples), std::move(labels), std::move(feature_names),
                        std::move(mapping));
}

StandardisationParams fit_standardiser(const Dataset& data, std::span<const int> reference_idx) {
    if (reference_idx.empty()) throw ValidationError("empty reference set for standardiser");
    const int k = data.features();
    const auto n = static_cast<double>(reference_idx.size());

    StandardisationParams params;
    params.means = Eigen::VectorXd::Zero(k);
    params.std_devs = Eigen::VectorXd::Ones(k);
    params.constant_features.assign(static_cast<std::size_t>(k), false);

    for (int r : reference_idx) params.means += data.samples.row(r).transpose();
    params.means /= n;

    Eigen::VectorXd sq = Eigen::VectorXd::Zero(k);
    for (int r : reference_idx) {
        sq += (data.samples.row(r).transpose() - params.means).array().square().matrix();
    }
    for (int j = 0; j < k; ++j) {
        const double sigma = std::sqrt(sq[j] / n);  // population convention
        if (sigma <= kConstantSigmaTol * (1.0 + std::abs(params.means[j]))) {
            params.constant_features[static_cast<std::size_t>(j)] = true;
            params.std_devs[j] = 1.0;
        } else {
            params.std_devs[j] = sigma;
        }
    }
    return params;
}

Dataset apply_standardiser(const Dataset& data, const StandardisationParams& params) {
    if (params.means.size() != data.features()) {
        throw ValidationError("standardiser dimension mismatch");
    }
    Dataset out = data;
    out.samples.rowwise() -= params.means.transpose();
    out.samples.array().rowwise() /= params.std_devs.transpose().array();
    return out;
}

Dataset invert_standardiser(const Dataset& data, const StandardisationParams& params) {
    if (params.means.size() != data.features()) {
        throw ValidationError("standardiser dimension mismatch");
    }
    Dataset out = data;
    out.samples.array().rowwise() *= params.std_devs.transpose().array();
    out.samples.rowwise() += params.means.transpose();
    return out;
}

SplitPlan stratified_split(const Dataset& data, std::uint64_t seed) {
    const std::array<int, 2> class_counts{data.count_class0, data.count_class1};
    for (int c = 0; c < 2; ++c) {
        if (class_counts[static_cast<std::size_t>(c)] < 10) {
            throw ValidationError("class " + std::to_string(c) + " has fewer than 10 samples");
        }
    }

    std::vector<std::vector<int>> pools(2);
    for (int i = 0; i < data.rows(); ++i) {
        pools[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])].push_back(i);
    }

    SplitPlan plan;
    plan.seed = seed;

    Rng rng(seed_combine(seed, 0x5b1e7ULL));
    for (auto& pool : pools) rng.shuffle(pool);
    std::vector<int> test_counts{rounded_share(class_counts[0], 0.2),
                                 rounded_share(class_counts[1], 0.2)};
    take_per_class(pools, test_counts, &plan.test_idx, &plan.train_idx);

    std::vector<std::vector<int>> train_pools(2);
    for (int i : plan.train_idx) {
        train_pools[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])].push_back(i);
    }
    const std::vector<int> val_counts{
        rounded_share(static_cast<int>(train_pools[0].size()), 0.25),
        rounded_share(static_cast<int>(train_pools[1].size()), 0.25)};

    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        Rng fold_rng(seed_combine(seed, 0xf01d5ULL, f));
        auto shuffled = train_pools;
        for (auto& pool : shuffled) fold_rng.shuffle(pool);
        take_per_class(shuffled, val_counts, &plan.folds[f].val, &plan.folds[f].train);
    }
    return plan;
}

void save_split_plan(const SplitPlan& plan, const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["seed"] = plan.seed;
    j["train_idx"] = plan.train_idx;
    j["test_idx"] = plan.test_idx;
    auto& folds = j["folds"] = nlohmann::json::array();
    for (const auto& fold : plan.folds) {
        folds.push_back({{"train", fold.train}, {"val", fold.val}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

Dataset drop_correlated(const Dataset& data, double cutoff) {
    if (cutoff <= 0.0 || cutoff > 1.0) {
        throw ValidationError("correlation cutoff must be in (0, 1]");
    }
    const int k = data.features();

    Eigen::MatrixXd centered = data.samples.rowwise() - data.samples.colwise().mean();
    Eigen::VectorXd norms(k);
    for (int j = 0; j < k; ++j) norms[j] = centered.col(j).norm();

    std::vector<bool> keep(static_cast<std::size_t>(k), true);
    for (int a = 0; a < k; ++a) {
        if (!keep[static_cast<std::size_t>(a)]) continue;
        for (int b = a + 1; b < k; ++b) {
            if (!keep[static_cast<std::size_t>(b)]) continue;
            if (norms[a] <= 0.0 || norms[b] <= 0.0) continue;
            const double corr = centered.col(a).dot(centered.col(b)) / (norms[a] * norms[b]);
            if (std::abs(corr) > cutoff) keep[static_cast<std::size_t>(b)] = false;
        }
    }

    std::vector<int> kept;
    for (int j = 0; j < k; ++j) {
        if (keep[static_cast<std::size_t>(j)]) kept.push_back(j);
    }
    if (kept.empty()) throw ValidationError("correlation cutoff removed every feature");

    Eigen::MatrixXd samples(data.rows(), static_cast<Eigen::Index>(kept.size()));
    std::vector<std::string> names;
    names.reserve(kept.size());
    for (std::size_t jj = 0; jj < kept.size(); ++jj) {
        samples.col(static_cast<Eigen::Index>(jj)) = data.samples.col(kept[jj]);
        names.push_back(data.feature_names[static_cast<std::size_t>(kept[jj])]);
    }
    return make_dataset(std::move(samples), data.labels, std::move(names), data.label_mapping);
}

}  // namespace safdr
