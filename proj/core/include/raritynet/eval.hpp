#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "raritynet/affemonet.hpp"
#include "raritynet/rarity.hpp"

namespace raritynet {

struct DatasetEntry {
    std::string subject;
    int label = 0;
    std::filesystem::path path;
};

struct DatasetIndex {
    std::vector<DatasetEntry> entries;
    std::vector<std::string> class_names;  // sorted
    std::vector<std::string> subjects;     // sorted, unique
};

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Layout: root/<subject>/<class>/<image>.pgm, lexicographically ordered.
DatasetIndex index_dataset(const std::filesystem::path& root);

struct Fold {
    std::string test_subject;
    std::vector<int> train;  // entry indices
    std::vector<int> test;
};

// One fold per subject; fold s tests subject s and trains on the rest.
std::vector<Fold> loso_splits(const DatasetIndex& index);

struct Report {
    double accuracy = 0.0;
    std::vector<double> fold_accuracies;
    std::vector<std::vector<int>> confusion;  // rows = truth
    std::string config_echo;                  // JSON fragment

    std::string to_json() const;
};

// LOSO + descriptor features + 1-NN under Manhattan distance
// (lowest-index neighbor wins ties).
Report evaluate_descriptor(const DatasetIndex& index, const RingParams& rp, int grid,
                           bool augment);

// LOSO + a fresh network per fold, trained on the augmented train split.
Report evaluate_net(const DatasetIndex& index, const NetConfig& config, int epochs);

// Periodic textures per class, a constant intensity offset per subject,
// mild noise. Written as a root/<subject>/<class>/*.pgm tree.
void generate_synthetic_dataset(const std::filesystem::path& root, int subjects, int classes,
                                int per_cell, int size, uint64_t seed);

GrayImage synthetic_image(int cls, int subject, int variant, int size, uint64_t seed);

}  // namespace raritynet
