// Command-line front end: descriptor encoding, featurization, training,
// LOSO evaluation, gradient verification.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "raritynet/affemonet.hpp"
#include "raritynet/eval.hpp"
#include "raritynet/image.hpp"
#include "raritynet/parallel.hpp"
#include "raritynet/rarity.hpp"

using namespace raritynet;

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write \"" + path + "\"");
    f << text;
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open \"" + path + "\"");
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::vector<uint8_t> read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open \"" + path + "\"");
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RARITY descriptor and AffEmoNet toolkit"};
    app.require_subcommand(1);

    int threads = 1;
    app.add_option("--threads", threads, "max worker threads");

    RingParams ring;
    int grid = 4;
    std::string input, out_prefix = "out", data_dir, checkpoint_path;
    NetConfig net;
    int epochs = 10;
    uint64_t seed = 0;
    int size = 120;
    bool augment = false;

    auto add_ring = [&](CLI::App* cmd) {
        cmd->add_option("--r1", ring.r1, "inner ring radius");
        cmd->add_option("--r2", ring.r2, "outer ring radius");
        cmd->add_option("--p", ring.p, "inner ring neighbor count");
    };
    auto add_net = [&](CLI::App* cmd) {
        cmd->add_option("--lr", net.lr, "learning rate");
        cmd->add_option("--momentum", net.momentum, "SGD momentum");
        cmd->add_option("--weight-decay", net.weight_decay, "weight decay");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--size", size, "input side length M");
        cmd->add_option("--epochs", epochs, "training epochs");
    };

    auto* encode = app.add_subcommand("encode", "write the four code maps as PGM files");
    encode->add_option("--input", input, "input P5 image")->required();
    encode->add_option("--out-prefix", out_prefix, "output prefix");
    add_ring(encode);

    auto* featurize = app.add_subcommand("featurize", "write block-histogram features as JSON");
    featurize->add_option("--input", input, "input P5 image")->required();
    featurize->add_option("--out-prefix", out_prefix, "output prefix");
    featurize->add_option("--grid", grid, "histogram grid g");
    add_ring(featurize);

    std::string dist_a, dist_b;
    auto* distance = app.add_subcommand("distance", "Manhattan distance between feature files");
    distance->add_option("a", dist_a, "first feature JSON")->required();
    distance->add_option("b", dist_b, "second feature JSON")->required();

    auto* evald = app.add_subcommand("eval-descriptor", "LOSO 1-NN evaluation of the descriptor");
    evald->add_option("--data", data_dir, "dataset root")->required();
    evald->add_option("--grid", grid, "histogram grid g");
    evald->add_flag("--augment", augment, "augment training images");
    evald->add_option("--out-prefix", out_prefix, "report prefix");
    add_ring(evald);

    auto* train = app.add_subcommand("train", "train on every image under --data");
    train->add_option("--data", data_dir, "dataset root")->required();
    train->add_option("--checkpoint", checkpoint_path, "checkpoint output path")->required();
    train->add_option("--out-prefix", out_prefix, "metrics prefix");
    add_ring(train);
    add_net(train);

    auto* evaln = app.add_subcommand("eval-net", "LOSO evaluation of the full network");
    evaln->add_option("--data", data_dir, "dataset root")->required();
    evaln->add_option("--out-prefix", out_prefix, "report prefix");
    add_ring(evaln);
    add_net(evaln);

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    add_ring(gradcheck);
    add_net(gradcheck);

    int subjects = 6, classes = 4, per_cell = 2;
    auto* synth = app.add_subcommand("synth", "generate a synthetic texture dataset");
    synth->add_option("--data", data_dir, "output root")->required();
    synth->add_option("--subjects", subjects, "subject count");
    synth->add_option("--classes", classes, "class count");
    synth->add_option("--per-cell", per_cell, "images per (subject, class)");
    synth->add_option("--size", size, "image side length");
    synth->add_option("--seed", seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    set_max_threads(threads);
    net.input_size = size;
    net.seed = seed;
    net.ring = ring;

    try {
        if (*encode) {
            GrayImage img = load_pgm_file(input);
            RarityResponse resp = encode_rarity(img, ring);
            for (int eta = 1; eta <= 4; ++eta)
                save_pgm_file(map_as_image(resp, eta),
                              out_prefix + "_eta" + std::to_string(eta) + ".pgm");
        } else if (*featurize) {
            GrayImage img = load_pgm_file(input);
            FeatureVector fv = block_histograms(encode_rarity(img, ring), grid);
            write_text(out_prefix + ".json", feature_to_json(fv));
        } else if (*distance) {
            FeatureVector a = feature_from_json(read_text(dist_a));
            FeatureVector b = feature_from_json(read_text(dist_b));
            std::printf("%.17g\n", l1_distance(a, b));
        } else if (*evald) {
            Report r = evaluate_descriptor(index_dataset(data_dir), ring, grid, augment);
            write_text(out_prefix + "_report.json", r.to_json());
            std::printf("accuracy %.4f\n", r.accuracy);
        } else if (*train) {
            DatasetIndex index = index_dataset(data_dir);
            net.num_classes = static_cast<int>(index.class_names.size());
            Model model = build(net);
            std::vector<std::pair<GrayImage, int>> samples;
            for (const auto& e : index.entries)
                samples.push_back({load_pgm_file(e.path.string()), e.label});

            std::ofstream metrics(out_prefix + "_metrics.jsonl");
            Rng rng(seed ^ 0x5eedf01dull);
            int step = 0;
            const int batch_size = 4;
            for (int e = 0; e < epochs; ++e) {
                std::vector<int> order(samples.size());
                for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
                for (size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1], order[rng.next_u64() % i]);
                for (size_t start = 0; start < order.size(); start += batch_size) {
                    std::vector<std::pair<GrayImage, int>> batch;
                    for (size_t k = start; k < std::min(order.size(), start + batch_size); ++k)
                        batch.push_back(samples[order[k]]);
                    double loss = train_step(model, batch);
                    nlohmann::json line{{"step", step++}, {"loss", loss}, {"lr", net.lr}};
                    metrics << line.dump() << "\n";
                }
            }
            auto bytes = save_checkpoint(model);
            std::ofstream ck(checkpoint_path, std::ios::binary);
            if (!ck) throw std::runtime_error("cannot write \"" + checkpoint_path + "\"");
            ck.write(reinterpret_cast<const char*>(bytes.data()),
                     static_cast<std::streamsize>(bytes.size()));
        } else if (*evaln) {
            DatasetIndex index = index_dataset(data_dir);
            net.num_classes = static_cast<int>(index.class_names.size());
            Report r = evaluate_net(index, net, epochs);
            write_text(out_prefix + "_report.json", r.to_json());
            std::printf("accuracy %.4f\n", r.accuracy);
        } else if (*gradcheck) {
            Model model = build(net);
            Rng rng(seed + 1);
            GrayImage img(net.input_size, net.input_size);
            for (double& v : img.data) v = rng.uniform(0.0, 255.0);
            PreparedInput in = prepare_input(model, img);
            auto loss = [&] {
                return softmax_cross_entropy(forward_graph(model, in.image, in.rarity), 0);
            };
            double err = grad_check(loss, model.param_nodes(), 1e-5, 8, seed + 2);
            nlohmann::json j{{"max_rel_error", err}, {"threshold", 1e-3}};
            std::printf("%s\n", j.dump().c_str());
            if (err > 1e-3) return 1;
        } else if (*synth) {
            generate_synthetic_dataset(data_dir, subjects, classes, per_cell, size, seed);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
