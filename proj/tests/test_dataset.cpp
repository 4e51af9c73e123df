#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "safdr/dataset.hpp"
#include "safdr/errors.hpp"
#include "test_support.hpp"

using namespace safdr;

namespace {

struct TempCsv {
    std::filesystem::path path;
    explicit TempCsv(const std::string& content) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("safdr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) +
                ".csv");
        std::ofstream out(path);
        out << content;
    }
    ~TempCsv() { std::filesystem::remove(path); }
};

int count_label(const Dataset& d, const std::vector<int>& rows, int label) {
    int n = 0;
    for (int r : rows) n += d.labels[static_cast<std::size_t>(r)] == label;
    return n;
}

// floor(x + 0.5), the share each class contributes to a partition.
int rounded_share(int count, double fraction) {
    return static_cast<int>(std::floor(static_cast<double>(count) * fraction + 0.5));
}

}  // namespace

TEST_CASE("load_csv parses values, maps labels lexicographically") {
    TempCsv file("a,b,target\n1.5,2.0,yes\n-3.25,0.5,no\n0,1,yes\n2,3,no\n");
    const Dataset d = load_csv(file.path.string(), "target", false);
    CHECK(d.rows() == 4);
    CHECK(d.features() == 2);
    CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
    // "no" < "yes", so no -> 0 and yes -> 1.
    CHECK(d.label_mapping.class0 == "no");
    CHECK(d.label_mapping.class1 == "yes");
    CHECK(d.labels == std::vector<int>{1, 0, 1, 0});
    CHECK(d.samples(0, 0) == 1.5);
    CHECK(d.samples(1, 0) == -3.25);
    CHECK(d.count_class0 == 2);
    CHECK(d.count_class1 == 2);
}

TEST_CASE("load_csv target column anywhere, windows line endings, BOM") {
    TempCsv file("\xEF\xBB\xBFtarget,x\r\nA,1\r\nB,2\r\nA,3\r\nB,4\r\n");
    const Dataset d = load_csv(file.path.string(), "target", false);
    CHECK(d.features() == 1);
    CHECK(d.labels == std::vector<int>{0, 1, 0, 1});
    CHECK(d.samples(3, 0) == 4.0);
}

TEST_CASE("load_csv missing values: error by default, dropped on request") {
    const std::string body = "x,y,t\n1,2,p\n?,3,q\n4,,p\n5,6,q\n7,8,p\n9,NaN,q\n10,11,q\n";
    TempCsv file(body);
    CHECK_THROWS_AS(load_csv(file.path.string(), "t", false), ValidationError);
    const Dataset d = load_csv(file.path.string(), "t", true);
    CHECK(d.rows() == 4);  // rows with ?, empty and NaN cells dropped
    CHECK(d.samples(0, 0) == 1.0);
    CHECK(d.samples(1, 0) == 5.0);
    CHECK(d.samples(2, 0) == 7.0);
    CHECK(d.samples(3, 0) == 10.0);
}

TEST_CASE("load_csv rejects bad shapes and labels") {
    TempCsv three_classes("x,t\n1,a\n2,b\n3,c\n4,a\n");
    CHECK_THROWS_AS(load_csv(three_classes.path.string(), "t", false), ValidationError);

    TempCsv one_class("x,t\n1,a\n2,a\n3,a\n");
    CHECK_THROWS_AS(load_csv(one_class.path.string(), "t", false), ValidationError);

    TempCsv dup_names("x,x,t\n1,2,a\n3,4,b\n5,6,a\n7,8,b\n");
    CHECK_THROWS_AS(load_csv(dup_names.path.string(), "t", false), ValidationError);

    TempCsv missing_target("x,y\n1,2\n3,4\n");
    CHECK_THROWS_AS(load_csv(missing_target.path.string(), "t", false), ValidationError);

    TempCsv ragged("x,y,t\n1,2,a\n3,b\n5,6,a\n7,8,b\n");
    CHECK_THROWS_AS(load_csv(ragged.path.string(), "t", false), ValidationError);

    CHECK_THROWS_AS(load_csv("/nonexistent/safdr.csv", "t", false), IoError);
}

TEST_CASE("make_dataset validates invariants") {
    const auto names = test::feature_names(2);
    Eigen::MatrixXd ok(4, 2);
    ok << 1, 2, 3, 4, 5, 6, 7, 8;

    CHECK_NOTHROW(make_dataset(ok, {0, 0, 1, 1}, names));
    // fewer than two samples in a class
    CHECK_THROWS_AS(make_dataset(ok, {0, 1, 1, 1}, names), ValidationError);
    // labels outside {0, 1}
    CHECK_THROWS_AS(make_dataset(ok, {0, 0, 1, 2}, names), ValidationError);
    // non-finite cell
    Eigen::MatrixXd bad = ok;
    bad(2, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(make_dataset(bad, {0, 0, 1, 1}, names), ValidationError);
    // name count mismatch
    CHECK_THROWS_AS(make_dataset(ok, {0, 0, 1, 1}, test::feature_names(3)), ValidationError);
}

TEST_CASE("standardiser: exact moments on a frozen example") {
    Eigen::MatrixXd samples(4, 2);
    // feature 0 takes values {2, 4}: mean 3, population std 1.
    // feature 1 is constant 5.
    samples << 2, 5, 4, 5, 2, 5, 4, 5;
    const Dataset d = make_dataset(samples, {0, 0, 1, 1}, test::feature_names(2));
    const std::vector<int> rows{0, 1, 2, 3};
    const StandardisationParams p = fit_standardiser(d, rows);

    CHECK(p.means[0] == 3.0);
    CHECK(p.std_devs[0] == 1.0);
    CHECK(p.means[1] == 5.0);
    CHECK(p.std_devs[1] == 1.0);  // constants standardise by sigma := 1
    CHECK_FALSE(p.constant_features[0]);
    CHECK(p.constant_features[1]);

    const Dataset z = apply_standardiser(d, p);
    CHECK(z.samples(0, 0) == -1.0);
    CHECK(z.samples(1, 0) == 1.0);
    CHECK(z.samples(0, 1) == 0.0);  // constant maps to zero
}

TEST_CASE("standardiser round-trips within 1e-12") {
    const Dataset d = test::gaussian_classes(20, 5, {0, 2}, 1.0, 99);
    const auto rows = test::all_rows(d);
    const StandardisationParams p = fit_standardiser(d, rows);
    const Dataset z = apply_standardiser(d, p);
    const Dataset back = invert_standardiser(z, p);
    CHECK((back.samples - d.samples).cwiseAbs().maxCoeff() < 1e-12);

    // standardised moments on the reference rows
    const StandardisationParams q = fit_standardiser(z, rows);
    CHECK(q.means.cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index j = 0; j < q.std_devs.size(); ++j) {
        CHECK(q.std_devs[j] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("standardiser fit uses only the reference rows") {
    Eigen::MatrixXd samples(6, 1);
    samples << 2, 4, 2, 4, 100, -100;
    const Dataset d = make_dataset(samples, {0, 0, 1, 1, 0, 1}, test::feature_names(1));
    const std::vector<int> reference{0, 1, 2, 3};
    const StandardisationParams p = fit_standardiser(d, reference);
    CHECK(p.means[0] == 3.0);
    CHECK(p.std_devs[0] == 1.0);
}

TEST_CASE("stratified_split: sizes, disjointness, determinism") {
    const Dataset d = test::gaussian_classes(50, 3, {0}, 1.0, 7);  // 50 + 50 rows
    const SplitPlan plan = stratified_split(d, 1234);

    CHECK(plan.seed == 1234);
    CHECK(plan.train_idx.size() + plan.test_idx.size() == 100);

    // Exact per-class shares: 20% of each class to test, rounded half up.
    CHECK(count_label(d, plan.test_idx, 0) == rounded_share(50, 0.2));
    CHECK(count_label(d, plan.test_idx, 1) == rounded_share(50, 0.2));

    std::set<int> train(plan.train_idx.begin(), plan.train_idx.end());
    std::set<int> tst(plan.test_idx.begin(), plan.test_idx.end());
    CHECK(train.size() == plan.train_idx.size());
    CHECK(tst.size() == plan.test_idx.size());
    for (int r : tst) CHECK(train.count(r) == 0);

    CHECK(std::is_sorted(plan.train_idx.begin(), plan.train_idx.end()));
    CHECK(std::is_sorted(plan.test_idx.begin(), plan.test_idx.end()));

    const int train0 = count_label(d, plan.train_idx, 0);
    const int train1 = count_label(d, plan.train_idx, 1);
    for (const FoldPair& fold : plan.folds) {
        CHECK(fold.train.size() + fold.val.size() == plan.train_idx.size());
        CHECK(count_label(d, fold.val, 0) == rounded_share(train0, 0.25));
        CHECK(count_label(d, fold.val, 1) == rounded_share(train1, 0.25));
        std::set<int> fold_all(fold.train.begin(), fold.train.end());
        fold_all.insert(fold.val.begin(), fold.val.end());
        CHECK(fold_all == train);  // each fold pair partitions the train rows
    }

    // folds differ from each other (independent shuffles)
    CHECK(plan.folds[0].val != plan.folds[1].val);

    const SplitPlan again = stratified_split(d, 1234);
    CHECK(again.train_idx == plan.train_idx);
    CHECK(again.test_idx == plan.test_idx);
    for (int f = 0; f < 5; ++f) {
        CHECK(again.folds[static_cast<std::size_t>(f)].val ==
              plan.folds[static_cast<std::size_t>(f)].val);
    }

    const SplitPlan other = stratified_split(d, 1235);
    CHECK(other.test_idx != plan.test_idx);
}

TEST_CASE("stratified_split proportion error is bounded by one sample per class") {
    const Dataset d = test::gaussian_classes(31, 2, {0}, 1.0, 5);  // odd class sizes
    const SplitPlan plan = stratified_split(d, 9);
    const double share0 = 0.5;  // balanced construction
    for (const std::vector<int>* part : {&plan.train_idx, &plan.test_idx}) {
        const double got =
            static_cast<double>(count_label(d, *part, 0)) / static_cast<double>(part->size());
        CHECK(std::abs(got - share0) <= 1.0 / static_cast<double>(part->size()));
    }
}

TEST_CASE("stratified_split needs ten samples per class") {
    const Dataset small = test::gaussian_classes(9, 2, {0}, 1.0, 3);
    CHECK_THROWS_AS(stratified_split(small, 1), ValidationError);
    const Dataset enough = test::gaussian_classes(10, 2, {0}, 1.0, 3);
    CHECK_NOTHROW(stratified_split(enough, 1));
}

TEST_CASE("save_split_plan writes a versioned, parseable file") {
    const Dataset d = test::gaussian_classes(20, 2, {0}, 1.0, 2);
    const SplitPlan plan = stratified_split(d, 77);
    const auto path = std::filesystem::temp_directory_path() / "safdr_split_plan.json";
    save_split_plan(plan, path.string());

    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"schema_version\"") != std::string::npos);
    CHECK(text.find("\"train_idx\"") != std::string::npos);
    CHECK(text.find("\"folds\"") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("drop_correlated removes the later duplicate only") {
    Rng rng(4);
    Eigen::MatrixXd samples(40, 3);
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        const double v = test::normal(rng);
        samples(i, 0) = v;
        samples(i, 1) = v;  // exact copy of feature 0
        samples(i, 2) = test::normal(rng);
        labels.push_back(i % 2);
    }
    const Dataset d = make_dataset(samples, labels, {"first", "copy", "other"});
    const Dataset kept = drop_correlated(d, 0.95);
    CHECK(kept.features() == 2);
    CHECK(kept.feature_names == std::vector<std::string>{"first", "other"});
    CHECK((kept.samples.col(0) - d.samples.col(0)).cwiseAbs().maxCoeff() == 0.0);
}
