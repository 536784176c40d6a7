#include <filesystem>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "raritynet/eval.hpp"

using namespace raritynet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("synthetic dataset indexes as expected") {
    TempDir tmp("raritynet_test_index");
    generate_synthetic_dataset(tmp.path, 3, 2, 2, 16, 99);

    DatasetIndex index = index_dataset(tmp.path);
    CHECK(index.subjects == std::vector<std::string>{"subject0", "subject1", "subject2"});
    CHECK(index.class_names == std::vector<std::string>{"class0", "class1"});
    REQUIRE(index.entries.size() == 3u * 2 * 2);
    for (const auto& e : index.entries) {
        CHECK(fs::exists(e.path));
        CHECK(e.label >= 0);
        CHECK(e.label < 2);
    }
    // lexicographic order: subject, then class, then filename
    CHECK(index.entries[0].subject == "subject0");
    CHECK(index.entries[0].label == 0);
    CHECK(index.entries[0].path.filename() == "img0.pgm");
    CHECK(index.entries[1].path.filename() == "img1.pgm");
    CHECK(index.entries[2].label == 1);
    CHECK(index.entries[4].subject == "subject1");
}

TEST_CASE("dataset errors") {
    CHECK_THROWS_WITH_AS(index_dataset("/nonexistent/raritynet/data"),
                         doctest::Contains("not found"), DatasetError);

    TempDir tmp("raritynet_test_baddata");
    fs::create_directories(tmp.path / "subject0" / "class0");
    CHECK_THROWS_WITH_AS(index_dataset(tmp.path), doctest::Contains("no images"), DatasetError);

    TempDir empty("raritynet_test_empty");
    CHECK_THROWS_WITH_AS(index_dataset(empty.path), doctest::Contains("empty"), DatasetError);
}

TEST_CASE("loso folds partition the dataset") {
    TempDir tmp("raritynet_test_loso");
    generate_synthetic_dataset(tmp.path, 4, 2, 1, 16, 7);
    DatasetIndex index = index_dataset(tmp.path);

    auto folds = loso_splits(index);
    REQUIRE(folds.size() == 4);
    for (const auto& fold : folds) {
        std::set<int> train(fold.train.begin(), fold.train.end());
        std::set<int> test(fold.test.begin(), fold.test.end());
        CHECK(train.size() + test.size() == index.entries.size());
        for (int i : test) {
            CHECK(train.count(i) == 0);
            CHECK(index.entries[i].subject == fold.test_subject);
        }
        for (int i : train) CHECK(index.entries[i].subject != fold.test_subject);
    }

    TempDir solo("raritynet_test_solo");
    generate_synthetic_dataset(solo.path, 1, 2, 1, 16, 7);
    CHECK_THROWS_AS(loso_splits(index_dataset(solo.path)), DatasetError);
}

TEST_CASE("descriptor evaluation separates the synthetic classes") {
    TempDir tmp("raritynet_test_desc");
    generate_synthetic_dataset(tmp.path, 3, 3, 1, 24, 123);
    DatasetIndex index = index_dataset(tmp.path);

    Report report = evaluate_descriptor(index, RingParams{}, 2, false);
    CHECK(report.accuracy == 1.0);
    REQUIRE(report.fold_accuracies.size() == 3);
    for (double a : report.fold_accuracies) CHECK(a == 1.0);

    int total = 0;
    for (const auto& row : report.confusion)
        for (int v : row) total += v;
    CHECK(total == static_cast<int>(index.entries.size()));

    // deterministic end to end
    Report again = evaluate_descriptor(index, RingParams{}, 2, false);
    CHECK(again.to_json() == report.to_json());

    auto parsed = nlohmann::json::parse(report.to_json());
    CHECK(parsed["accuracy"].get<double>() == 1.0);
    CHECK(parsed["config"]["mode"] == "descriptor");
    CHECK(parsed["config"]["grid"] == 2);
}

TEST_CASE("descriptor evaluation with augmented training set") {
    TempDir tmp("raritynet_test_desc_aug");
    generate_synthetic_dataset(tmp.path, 2, 2, 1, 24, 321);
    DatasetIndex index = index_dataset(tmp.path);
    Report report = evaluate_descriptor(index, RingParams{}, 1, true);
    CHECK(report.accuracy >= 0.0);
    CHECK(report.accuracy <= 1.0);
    CHECK(nlohmann::json::parse(report.to_json())["config"]["augment"] == true);
}

TEST_CASE("network evaluation runs end to end on a tiny dataset") {
    TempDir tmp("raritynet_test_net");
    generate_synthetic_dataset(tmp.path, 2, 2, 1, 24, 555);
    DatasetIndex index = index_dataset(tmp.path);

    NetConfig cfg;
    cfg.input_size = 24;
    cfg.num_classes = 2;
    cfg.seed = 3;
    Report report = evaluate_net(index, cfg, 1);

    CHECK(report.fold_accuracies.size() == 2);
    CHECK(report.accuracy >= 0.0);
    CHECK(report.accuracy <= 1.0);
    int total = 0;
    for (const auto& row : report.confusion)
        for (int v : row) total += v;
    CHECK(total == static_cast<int>(index.entries.size()));

    auto parsed = nlohmann::json::parse(report.to_json());
    CHECK(parsed["config"]["mode"] == "net");
    CHECK(parsed["config"]["epochs"] == 1);
}

TEST_CASE("synthetic images are deterministic and in range") {
    GrayImage a = synthetic_image(1, 2, 0, 16, 42);
    GrayImage b = synthetic_image(1, 2, 0, 16, 42);
    CHECK(a == b);
    CHECK(a.width == 16);
    for (double v : a.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 255.0);
    }
    CHECK(synthetic_image(0, 2, 0, 16, 42).data != a.data);
}
