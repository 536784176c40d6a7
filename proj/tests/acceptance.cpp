// Acceptance gate: one pass/fail line per criterion, nonzero exit on
// any failure. Self-contained; uses only the library API plus the
// brute-force oracles shared with the unit tests.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "raritynet/affemonet.hpp"
#include "raritynet/eval.hpp"
#include "raritynet/ops.hpp"

using namespace raritynet;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Gate {
    int failures = 0;
    int number = 0;

    void run(const std::string& title, const std::function<bool(std::string&)>& body) {
        ++number;
        std::string detail;
        bool ok = false;
        try {
            ok = body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("%s  criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", number, title.c_str(),
                    detail.empty() ? "" : " — ", detail.c_str());
        std::fflush(stdout);
        failures += !ok;
    }
};

bool maps_equal(const RarityResponse& a, const RarityResponse& b) { return a.maps == b.maps; }

}  // namespace

int main() {
    Gate gate;

    gate.run("descriptor equals the triplet-enumeration oracle", [](std::string& detail) {
        auto t0 = Clock::now();
        Rng rng(1001);
        RingParams rp;
        for (int t = 0; t < 50; ++t) {
            GrayImage img = oracle::random_image(rng, 9, 9);
            RarityResponse resp = encode_rarity(img, rp);
            for (int eta = 1; eta <= 4; ++eta)
                for (int y = 0; y < 9; ++y)
                    for (int x = 0; x < 9; ++x)
                        if (resp.code(eta, x, y) !=
                            oracle::rarity_code(img, x, y, eta, rp.r1, rp.r2, rp.p)) {
                            detail = "mismatch at image " + std::to_string(t);
                            return false;
                        }
        }
        double secs = seconds_since(t0);
        detail = "50 images, " + std::to_string(secs) + " s";
        return secs < 10.0;
    });

    gate.run("offset, scale, and inversion invariances are exact", [](std::string& detail) {
        Rng rng(1002);
        for (int t = 0; t < 20; ++t) {
            GrayImage img = oracle::random_image(rng, 9, 9);
            RarityResponse base = encode_rarity(img, {});

            GrayImage shifted = img;
            for (double& v : shifted.data) v += 41.0;
            if (!maps_equal(encode_rarity(shifted, {}), base)) {
                detail = "offset failed at image " + std::to_string(t);
                return false;
            }

            GrayImage scaled = img;
            for (double& v : scaled.data) v *= 1.2;
            if (!maps_equal(encode_rarity(scaled, {}), base)) {
                detail = "scale failed at image " + std::to_string(t);
                return false;
            }

            GrayImage inverted = img;
            for (double& v : inverted.data) v = 255.0 - v;
            RarityResponse inv = encode_rarity(inverted, {});
            if (inv.maps[0] != base.maps[2] || inv.maps[1] != base.maps[3] ||
                inv.maps[2] != base.maps[0] || inv.maps[3] != base.maps[1]) {
                detail = "inversion failed at image " + std::to_string(t);
                return false;
            }
        }
        return true;
    });

    gate.run("conv2d matches the naive oracle within 1e-12", [](std::string& detail) {
        Rng rng(1003);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            int z = std::vector<int>{1, 3, 5, 7}[rng.uniform_int(0, 3)];
            int s = std::vector<int>{1, 2, 4}[rng.uniform_int(0, 2)];
            int cin = rng.uniform_int(1, 4), cout = rng.uniform_int(1, 4);
            Tensor in({rng.uniform_int(1, 12), rng.uniform_int(1, 12), cin});
            Tensor w({z, z, cin, cout});
            Tensor b({cout});
            for (double& v : in.data) v = rng.uniform(-1.0, 1.0);
            for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
            for (double& v : b.data) v = rng.uniform(-1.0, 1.0);

            Tensor got = conv2d(make_constant(in), make_constant(w), make_constant(b),
                                ConvSpec{z, cin, cout, s})
                             ->value;
            Tensor expected = oracle::conv2d(in, w, b, s);
            if (got.shape != expected.shape) {
                detail = "shape mismatch at combo " + std::to_string(t);
                return false;
            }
            for (size_t i = 0; i < got.data.size(); ++i) {
                double rel = std::abs(got.data[i] - expected.data[i]) /
                             std::max({std::abs(got.data[i]), std::abs(expected.data[i]), 1.0});
                worst = std::max(worst, rel);
            }
        }
        detail = "max relative error " + std::to_string(worst);
        return worst <= 1e-12;
    });

    gate.run("finite differences confirm the network gradient", [](std::string& detail) {
        auto t0 = Clock::now();
        NetConfig cfg;
        cfg.input_size = 24;
        cfg.seed = 1004;
        Model m = build(cfg);
        Rng rng(1004);
        GrayImage img = oracle::random_image(rng, 24, 24, 255);
        PreparedInput in = prepare_input(m, img);
        auto loss = [&] {
            return softmax_cross_entropy(forward_graph(m, in.image, in.rarity), 2);
        };
        double err = grad_check(loss, m.param_nodes(), 1e-5, 2, 4242);
        double secs = seconds_since(t0);
        detail = "max relative error " + std::to_string(err) + ", " + std::to_string(secs) + " s";
        return err <= 1e-3 && secs < 300.0;
    });

    gate.run("parameter count lies in the published budget", [](std::string& detail) {
        int64_t total = param_count(build(NetConfig{}));
        detail = std::to_string(total) + " parameters";
        return total == 1682743 && total >= 1500000 && total <= 1800000;
    });

    gate.run("stream shapes follow the ledger", [](std::string& detail) {
        Model m = build(NetConfig{});
        Rng rng(1006);
        Tensor img({120, 120, 1});
        for (double& v : img.data) v = rng.uniform(0.0, 1.0);
        std::array<NodePtr, 4> rar;
        for (auto& r : rar) {
            Tensor t({120, 120, 1});
            for (double& v : t.data) v = rng.uniform(0.0, 1.0);
            r = make_constant(std::move(t));
        }

        NodePtr h = hbef_forward(m, make_constant(img), rar);
        if (h->value.shape != std::vector<int>{60, 60, 64}) {
            detail = "edge stream shape";
            return false;
        }
        NodePtr ms = mssec_forward(m, h);
        if (ms->value.shape != std::vector<int>{8, 8, 96}) {
            detail = "multi-scale stream shape";
            return false;
        }
        auto rq = ruccf_forward(m, rar);
        for (const auto& r : rq)
            if (r->value.shape != std::vector<int>{16}) {
                detail = "context vector length";
                return false;
            }
        if (m.param("head.fc1.w")->value.dim(0) != 6192) {
            detail = "head input length";
            return false;
        }
        // the strided tower and the stride-4 skip must land on the same
        // grid for every legal input size, not just the default
        for (int msz = 24; msz <= 400; msz += 8) {
            int a1 = ConvSpec::out_dim(msz / 2, 2);
            int tower = ConvSpec::out_dim(ConvSpec::out_dim(a1, 2), 2);
            int skip = ConvSpec::out_dim(a1, 4);
            if (tower != skip) {
                detail = "skip misaligned at input " + std::to_string(msz);
                return false;
            }
        }
        return true;
    });

    gate.run("the network overfits 16 images with stock hyperparameters",
             [](std::string& detail) {
                 auto t0 = Clock::now();
                 NetConfig cfg;
                 cfg.input_size = 24;
                 cfg.num_classes = 4;
                 cfg.seed = 1007;

                 std::vector<std::pair<GrayImage, int>> data;
                 for (int cls = 0; cls < 4; ++cls)
                     for (int v = 0; v < 4; ++v)
                         data.push_back({synthetic_image(cls, 0, v, 24, 77), cls});

                 // determinism probe: two fresh models agree step for step
                 Model m = build(cfg);
                 Model twin = build(cfg);
                 auto batch_at = [&](int step) {
                     std::vector<std::pair<GrayImage, int>> b;
                     for (int k = 0; k < 4; ++k) b.push_back(data[(4 * step + k) % 16]);
                     return b;
                 };
                 for (int step = 0; step < 5; ++step) {
                     double a = train_step(m, batch_at(step));
                     double b = train_step(twin, batch_at(step));
                     if (a != b) {
                         detail = "nondeterministic at step " + std::to_string(step);
                         return false;
                     }
                 }

                 auto train_accuracy = [&] {
                     int correct = 0;
                     for (const auto& [img, label] : data) {
                         Tensor logits = forward(m, img);
                         int arg = 0;
                         for (int c = 1; c < 4; ++c)
                             if (logits.data[c] > logits.data[arg]) arg = c;
                         correct += arg == label;
                     }
                     return correct / 16.0;
                 };

                 double acc = 0.0;
                 int step = 5;
                 for (; step < 500; ++step) {
                     train_step(m, batch_at(step));
                     if (step % 20 == 19) {
                         acc = train_accuracy();
                         if (acc >= 0.95) break;
                     }
                 }
                 if (acc < 0.95) acc = train_accuracy();
                 double secs = seconds_since(t0);
                 detail = "train accuracy " + std::to_string(acc) + " after " +
                          std::to_string(step + 1) + " steps, " + std::to_string(secs) + " s";
                 return acc >= 0.95 && secs < 600.0;
             });

    gate.run("descriptor harness separates the synthetic subjects", [](std::string& detail) {
        fs::path root = fs::temp_directory_path() / "raritynet_acceptance_data";
        fs::remove_all(root);
        generate_synthetic_dataset(root, 6, 4, 2, 32, 2024);
        DatasetIndex index = index_dataset(root);

        Report report = evaluate_descriptor(index, RingParams{}, 2, false);
        if (report.accuracy != 1.0) {
            detail = "accuracy " + std::to_string(report.accuracy);
            fs::remove_all(root);
            return false;
        }

        // permuted-label control: shuffle labels and expect chance level
        DatasetIndex shuffled = index;
        Rng rng(1008);
        for (size_t i = shuffled.entries.size(); i > 1; --i)
            std::swap(shuffled.entries[i - 1].label, shuffled.entries[rng.next_u64() % i].label);
        Report control = evaluate_descriptor(shuffled, RingParams{}, 2, false);
        fs::remove_all(root);

        detail = "accuracy 1.0, permuted control " + std::to_string(control.accuracy);
        return std::abs(control.accuracy - 0.25) <= 0.15;
    });

    gate.run("augmentation yields the stated ten variants", [](std::string& detail) {
        Rng rng(1009);
        GrayImage img = oracle::random_image(rng, 16, 16);
        auto set = augment_set(img);
        if (set.size() != 10) {
            detail = "size " + std::to_string(set.size());
            return false;
        }
        for (const auto& v : set)
            if (v.width != img.width || v.height != img.height) {
                detail = "dimension drift";
                return false;
            }
        if (!(set[2] == img)) {
            detail = "index 2 is not the original";
            return false;
        }
        if (!(set[7] == hflip(img))) {
            detail = "index 7 is not the flip";
            return false;
        }
        for (int i = 0; i < 5; ++i)
            if (!(set[5 + i] == hflip(set[i]))) {
                detail = "flip half out of order at " + std::to_string(i);
                return false;
            }
        return true;
    });

    gate.run("checkpoints reproduce the forward pass bit for bit", [](std::string& detail) {
        NetConfig cfg;
        cfg.input_size = 24;
        cfg.seed = 1010;
        Model m = build(cfg);
        Rng rng(1010);
        for (int s = 0; s < 2; ++s) {
            std::vector<std::pair<GrayImage, int>> batch;
            for (int k = 0; k < 2; ++k)
                batch.push_back({oracle::random_image(rng, 24, 24, 255), k});
            train_step(m, batch);
        }

        Model back = load_checkpoint(save_checkpoint(m), cfg);
        for (int t = 0; t < 10; ++t) {
            GrayImage probe = oracle::random_image(rng, 24, 24, 255);
            if (forward(m, probe).data != forward(back, probe).data) {
                detail = "forward diverged on input " + std::to_string(t);
                return false;
            }
        }
        return true;
    });

    if (gate.failures == 0)
        std::printf("all %d acceptance criteria passed\n", gate.number);
    else
        std::printf("%d of %d acceptance criteria FAILED\n", gate.failures, gate.number);
    return gate.failures == 0 ? 0 : 1;
}
