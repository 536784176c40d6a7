#include "raritynet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "raritynet/image.hpp"

namespace raritynet {

namespace fs = std::filesystem;

DatasetIndex index_dataset(const fs::path& root) {
    if (!fs::exists(root)) throw DatasetError("dataset root not found: " + root.string());
    if (!fs::is_directory(root)) throw DatasetError("dataset root is not a directory");

    auto sorted_dirs = [](const fs::path& p) {
        std::vector<fs::path> out;
        for (const auto& e : fs::directory_iterator(p))
            if (e.is_directory()) out.push_back(e.path());
        std::sort(out.begin(), out.end());
        return out;
    };

    std::set<std::string> class_set;
    for (const auto& subject : sorted_dirs(root))
        for (const auto& cls : sorted_dirs(subject)) class_set.insert(cls.filename().string());

    DatasetIndex index;
    index.class_names.assign(class_set.begin(), class_set.end());

    for (const auto& subject : sorted_dirs(root)) {
        for (const auto& cls : sorted_dirs(subject)) {
            std::vector<fs::path> images;
            for (const auto& e : fs::directory_iterator(cls))
                if (e.is_regular_file() && e.path().extension() == ".pgm")
                    images.push_back(e.path());
            if (images.empty())
                throw DatasetError("class directory with no images: " + cls.string());
            std::sort(images.begin(), images.end());
            auto it = std::lower_bound(index.class_names.begin(), index.class_names.end(),
                                       cls.filename().string());
            int label = static_cast<int>(it - index.class_names.begin());
            for (const auto& img : images)
                index.entries.push_back({subject.filename().string(), label, img});
        }
        index.subjects.push_back(subject.filename().string());
    }
    if (index.entries.empty()) throw DatasetError("empty dataset: " + root.string());
    return index;
}

std::vector<Fold> loso_splits(const DatasetIndex& index) {
    if (index.subjects.size() < 2)
        throw DatasetError("leave-one-subject-out needs at least 2 subjects");
    std::vector<Fold> folds;
    for (const auto& subject : index.subjects) {
        Fold f;
        f.test_subject = subject;
        for (int i = 0; i < static_cast<int>(index.entries.size()); ++i) {
            if (index.entries[i].subject == subject)
                f.test.push_back(i);
            else
                f.train.push_back(i);
        }
        folds.push_back(std::move(f));
    }
    return folds;
}

std::string Report::to_json() const {
    nlohmann::json j;
    j["accuracy"] = accuracy;
    j["folds"] = fold_accuracies;
    j["confusion"] = confusion;
    j["config"] = config_echo.empty() ? nlohmann::json::object()
                                      : nlohmann::json::parse(config_echo);
    return j.dump(2);
}

namespace {

struct Scorer {
    int num_classes;
    std::vector<std::vector<int>> confusion;
    std::vector<double> fold_accuracies;
    int fold_correct = 0, fold_total = 0;

    explicit Scorer(int classes)
        : num_classes(classes), confusion(classes, std::vector<int>(classes, 0)) {}

    void record(int truth, int predicted) {
        confusion[truth][predicted] += 1;
        fold_correct += truth == predicted;
        fold_total += 1;
    }
    void end_fold() {
        fold_accuracies.push_back(fold_total ? double(fold_correct) / fold_total : 0.0);
        fold_correct = fold_total = 0;
    }
    Report finish(std::string config_echo) const {
        Report r;
        long trace = 0, total = 0;
        for (int i = 0; i < num_classes; ++i)
            for (int k = 0; k < num_classes; ++k) {
                total += confusion[i][k];
                if (i == k) trace += confusion[i][k];
            }
        r.accuracy = total ? double(trace) / total : 0.0;
        r.fold_accuracies = fold_accuracies;
        r.confusion = confusion;
        r.config_echo = std::move(config_echo);
        return r;
    }
};

}  // namespace

Report evaluate_descriptor(const DatasetIndex& index, const RingParams& rp, int grid,
                           bool augment) {
    const int n = static_cast<int>(index.entries.size());

    // features are fold-independent; compute once
    std::vector<FeatureVector> base(n);
    std::vector<std::vector<FeatureVector>> augmented(n);
    for (int i = 0; i < n; ++i) {
        GrayImage img = load_pgm_file(index.entries[i].path.string());
        base[i] = block_histograms(encode_rarity(img, rp), grid);
        if (augment)
            for (const auto& variant : augment_set(img))
                augmented[i].push_back(block_histograms(encode_rarity(variant, rp), grid));
    }

    Scorer scorer(static_cast<int>(index.class_names.size()));
    for (const auto& fold : loso_splits(index)) {
        std::vector<std::pair<const FeatureVector*, int>> train;
        for (int i : fold.train) {
            if (augment)
                for (const auto& fv : augmented[i]) train.push_back({&fv, index.entries[i].label});
            else
                train.push_back({&base[i], index.entries[i].label});
        }
        for (int i : fold.test) {
            double best = 0.0;
            int predicted = -1;
            for (const auto& [fv, label] : train) {
                double d = l1_distance(base[i], *fv);
                if (predicted < 0 || d < best) {  // ties keep the earliest neighbor
                    best = d;
                    predicted = label;
                }
            }
            scorer.record(index.entries[i].label, predicted);
        }
        scorer.end_fold();
    }

    nlohmann::json cfg;
    cfg["mode"] = "descriptor";
    cfg["r1"] = rp.r1;
    cfg["r2"] = rp.r2;
    cfg["p"] = rp.p;
    cfg["grid"] = grid;
    cfg["augment"] = augment;
    cfg["classes"] = index.class_names;
    return scorer.finish(cfg.dump());
}

Report evaluate_net(const DatasetIndex& index, const NetConfig& config, int epochs) {
    const int batch_size = 4;
    Scorer scorer(static_cast<int>(index.class_names.size()));

    std::vector<GrayImage> images(index.entries.size());
    for (size_t i = 0; i < index.entries.size(); ++i)
        images[i] = load_pgm_file(index.entries[i].path.string());

    for (const auto& fold : loso_splits(index)) {
        Model model = build(config);

        std::vector<std::pair<GrayImage, int>> train;
        for (int i : fold.train)
            for (auto& variant : augment_set(images[i]))
                train.push_back({std::move(variant), index.entries[i].label});

        Rng rng(config.seed ^ 0x5eedf01dull);
        for (int e = 0; e < epochs; ++e) {
            std::vector<int> order(train.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            for (size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[rng.next_u64() % i]);
            for (size_t start = 0; start < order.size(); start += batch_size) {
                std::vector<std::pair<GrayImage, int>> batch;
                for (size_t k = start; k < std::min(order.size(), start + batch_size); ++k)
                    batch.push_back(train[order[k]]);
                train_step(model, batch);
            }
        }

        for (int i : fold.test) {
            Tensor logits = forward(model, images[i]);
            int predicted = 0;
            for (int c = 1; c < config.num_classes; ++c)
                if (logits.data[c] > logits.data[predicted]) predicted = c;
            scorer.record(index.entries[i].label, predicted);
        }
        scorer.end_fold();
    }

    nlohmann::json cfg;
    cfg["mode"] = "net";
    cfg["input_size"] = config.input_size;
    cfg["num_classes"] = config.num_classes;
    cfg["epochs"] = epochs;
    cfg["lr"] = config.lr;
    cfg["momentum"] = config.momentum;
    cfg["weight_decay"] = config.weight_decay;
    cfg["seed"] = config.seed;
    cfg["classes"] = index.class_names;
    return scorer.finish(cfg.dump());
}

GrayImage synthetic_image(int cls, int subject, int variant, int size, uint64_t seed) {
    const double pi = std::acos(-1.0);
    const double freq = 2.0 + cls;
    const double theta = 0.3 + 0.9 * cls;
    const double cx = std::cos(theta), sy = std::sin(theta);
    const double phase = 0.7 * variant;
    const double offset = 6.0 * (subject % 7 - 3);

    Rng rng(seed ^ (static_cast<uint64_t>(cls) << 40) ^ (static_cast<uint64_t>(subject) << 20) ^
            static_cast<uint64_t>(variant));
    GrayImage img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double t = 2.0 * pi * freq * (x * cx + y * sy) / size + phase;
            double v = 128.0 + offset + 60.0 * std::sin(t) + rng.uniform(-1.5, 1.5);
            img.at(x, y) = std::clamp(v, 0.0, 255.0);
        }
    }
    return img;
}

void generate_synthetic_dataset(const fs::path& root, int subjects, int classes, int per_cell,
                                int size, uint64_t seed) {
    for (int s = 0; s < subjects; ++s) {
        for (int c = 0; c < classes; ++c) {
            fs::path dir = root / ("subject" + std::to_string(s)) / ("class" + std::to_string(c));
            fs::create_directories(dir);
            for (int v = 0; v < per_cell; ++v) {
                GrayImage img = synthetic_image(c, s, v, size, seed);
                save_pgm_file(img, (dir / ("img" + std::to_string(v) + ".pgm")).string());
            }
        }
    }
}

}  // namespace raritynet
