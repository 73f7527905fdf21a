#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vlg/common/errors.hpp"
#include "vlg/nn/grad_check.hpp"
#include "vlg/policy/model.hpp"

using namespace vlg;
using namespace vlg::policy;

namespace {

ModelConfig micro_config(FusionMode mode, int width = 16, int heads = 2) {
    ModelConfig c;
    c.mode = mode;
    c.attention.width = width;
    c.attention.heads = heads;
    c.bands = 2;
    return c;
}

std::vector<double> unit_vector(Rng& rng, int d) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(d));
    double s = 0.0;
    for (double& x : v) s += (x = n(rng)) * x;
    for (double& x : v) x /= std::sqrt(s);
    return v;
}

EncodedObservation random_observation(Rng& rng, int n, int k, int d) {
    std::uniform_real_distribution<double> u(0.0, 0.3), q(0.1, 1.0), yaw(-3.0, 3.0);
    EncodedObservation e;
    e.box_feats = Tensor2(n, d);
    for (int i = 0; i < n; ++i) {
        const auto v = unit_vector(rng, d);
        for (int j = 0; j < d; ++j) e.box_feats(i, j) = v[static_cast<std::size_t>(j)];
        e.centers.push_back({u(rng), u(rng), 0.1 * u(rng)});
    }
    e.lang = unit_vector(rng, d);
    for (int i = 0; i < k; ++i) e.grasps.push_back({{u(rng), u(rng), 0.1 * u(rng)}, yaw(rng), 0.05 + 0.1 * u(rng), q(rng)});
    return e;
}

EncodedObservation permute_boxes(const EncodedObservation& e, const std::vector<int>& perm) {
    EncodedObservation out = e;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.box_feats.row(static_cast<Eigen::Index>(i)) = e.box_feats.row(perm[i]);
        out.centers[i] = e.centers[static_cast<std::size_t>(perm[i])];
    }
    return out;
}

EncodedObservation permute_grasps(const EncodedObservation& e, const std::vector<int>& perm) {
    EncodedObservation out = e;
    for (std::size_t i = 0; i < perm.size(); ++i) out.grasps[i] = e.grasps[static_cast<std::size_t>(perm[i])];
    return out;
}

std::vector<int> shuffled(int n, Rng& rng) {
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

const FusionMode kModes[] = {FusionMode::cross_attention, FusionMode::position_as_key, FusionMode::film};

}  // namespace

TEST_SUITE("state") {
    TEST_CASE("state is K x width for every mode") {
        Rng rng(1);
        for (FusionMode m : kModes) {
            FusionModel model(micro_config(m));
            model.init(rng);
            const auto e = random_observation(rng, 3, 5, 16);
            Tape tape(false);
            const Tensor2& s = tape.value(build_state(tape, model, e));
            CHECK(s.rows() == 5);
            CHECK(s.cols() == 16);
            CHECK(s.allFinite());
        }
    }

    TEST_CASE("empty boxes or grasps are rejected") {
        Rng rng(2);
        FusionModel model(micro_config(FusionMode::cross_attention));
        model.init(rng);
        auto e = random_observation(rng, 2, 2, 16);
        auto no_grasps = e;
        no_grasps.grasps.clear();
        Tape tape(false);
        CHECK_THROWS_AS(build_state(tape, model, no_grasps), ConfigError);
        auto no_boxes = e;
        no_boxes.box_feats = Tensor2(0, 16);
        no_boxes.centers.clear();
        CHECK_THROWS_AS(build_state(tape, model, no_boxes), ConfigError);
    }

    TEST_CASE("default model is 512 wide with 8 heads") {
        ModelConfig c;
        CHECK(c.attention.width == 512);
        CHECK(c.attention.heads == 8);
        CHECK(c.attention.layers == 1);
        Rng rng(3);
        FusionModel model(c);
        model.init(rng);
        const auto e = random_observation(rng, 2, 3, 512);
        Tape tape(false);
        const Tensor2& s = tape.value(build_state(tape, model, e));
        CHECK(s.rows() == 3);
        CHECK(s.cols() == 512);
    }
}

TEST_SUITE("permutation") {
    TEST_CASE("policy and critics ignore box order and follow grasp order") {
        Rng rng(4);
        for (FusionMode m : kModes) {
            CAPTURE(to_string(m));
            FusionModel model(micro_config(m));
            model.init(rng);
            const int trials = m == FusionMode::cross_attention ? 100 : 30;
            double worst = 0.0;
            for (int t = 0; t < trials; ++t) {
                const int n = 1 + static_cast<int>(uniform_index(rng, 5));
                const int k = 1 + static_cast<int>(uniform_index(rng, 6));
                const auto e = random_observation(rng, n, k, 16);
                const auto pi = policy_forward(model, e);
                const auto q = critic_forward(model, e);

                const auto eb = permute_boxes(e, shuffled(n, rng));
                worst = std::max({worst, max_diff(pi, policy_forward(model, eb)),
                                  max_diff(q.q1, critic_forward(model, eb).q1), max_diff(q.q2, critic_forward(model, eb).q2)});

                const auto perm = shuffled(k, rng);
                const auto eg = permute_grasps(e, perm);
                const auto pig = policy_forward(model, eg);
                const auto qg = critic_forward(model, eg);
                for (int i = 0; i < k; ++i) {
                    const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(perm[a]);
                    worst = std::max({worst, std::abs(pig[a] - pi[b]), std::abs(qg.q1[a] - q.q1[b]),
                                      std::abs(qg.q2[a] - q.q2[b])});
                }
            }
            CHECK(worst < 1e-9);
        }
    }

    TEST_CASE("identical grasps get identical probabilities") {
        Rng rng(5);
        FusionModel model(micro_config(FusionMode::cross_attention));
        model.init(rng);
        auto e = random_observation(rng, 3, 3, 16);
        e.grasps[2] = e.grasps[0];
        const auto pi = policy_forward(model, e);
        CHECK(pi[0] == doctest::Approx(pi[2]).epsilon(1e-12));
        CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_SUITE("heads") {
    TEST_CASE("hand-set head on a two-row state") {
        Head h("h", 2);
        auto& l0 = h.mlp.layers[0];
        auto& l1 = h.mlp.layers[1];
        l0.weight.value << 1.0, -1.0, 0.5, 2.0;
        l0.bias.value << 0.1, -0.2;
        l1.weight.value << 1.5, -0.5;
        l1.bias.value << 0.3;
        Tensor2 state(2, 2);
        state << 1.0, 2.0, -1.0, 0.5;
        auto manual = [](double x0, double x1) {
            const double h0 = std::max(0.0, 1.0 * x0 - 1.0 * x1 + 0.1);
            const double h1 = std::max(0.0, 0.5 * x0 + 2.0 * x1 - 0.2);
            return 1.5 * h0 - 0.5 * h1 + 0.3;
        };
        Tape tape(false);
        const Tensor2& out = tape.value(h.forward(tape, tape.constant(state)));
        REQUIRE(out.rows() == 1);
        REQUIRE(out.cols() == 2);
        CHECK(out(0, 0) == doctest::Approx(manual(1.0, 2.0)).epsilon(1e-12));
        CHECK(out(0, 1) == doctest::Approx(manual(-1.0, 0.5)).epsilon(1e-12));
        const double e0 = std::exp(out(0, 0)), e1 = std::exp(out(0, 1));
        const Tensor2& pi = tape.value(tape.softmax_rows(h.forward(tape, tape.constant(state))));
        CHECK(pi(0, 0) == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-12));
    }

    TEST_CASE("zero-weight critics give zero q") {
        Rng rng(6);
        FusionModel model(micro_config(FusionMode::cross_attention));
        model.init(rng);
        for (auto* p : model.critic_params()) p->value.setZero();
        const auto q = critic_forward(model, random_observation(rng, 2, 4, 16));
        for (double v : q.q1) CHECK(v == 0.0);
        for (double v : q.q2) CHECK(v == 0.0);
    }

    TEST_CASE("targets start as copies of the online critics") {
        Rng rng(7);
        FusionModel model(micro_config(FusionMode::film));
        model.init(rng);
        const auto e = random_observation(rng, 2, 3, 16);
        const auto a = critic_forward(model, e), b = critic_forward(model, e, true);
        CHECK(a.q1 == b.q1);
        CHECK(a.q2 == b.q2);
        CHECK(a.q1 != a.q2);
    }
}

TEST_SUITE("actions") {
    TEST_CASE("degenerate and tied distributions") {
        Rng rng(8);
        CHECK(select_action({1.0, 0.0, 0.0}, ActionMode::greedy, rng) == 0);
        CHECK(select_action({1.0, 0.0, 0.0}, ActionMode::sample, rng) == 0);
        CHECK(select_action({0.5, 0.5}, ActionMode::greedy, rng) == 0);
        CHECK(select_action({0.0, 0.0, 1.0}, ActionMode::sample, rng) == 2);
        CHECK_THROWS_AS(select_action({}, ActionMode::greedy, rng), ConfigError);
    }

    TEST_CASE("sampling frequencies follow the distribution") {
        Rng rng(9);
        int zeros = 0;
        for (int i = 0; i < 10000; ++i) zeros += select_action({0.7, 0.3}, ActionMode::sample, rng) == 0;
        CHECK(std::abs(zeros / 10000.0 - 0.7) <= 0.02);
    }

    TEST_CASE("greedy choice is unchanged by a constant logit shift") {
        Rng rng(10);
        std::normal_distribution<double> n(0.0, 2.0);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> l(6), shifted(6);
            const double c = n(rng) * 10.0;
            for (std::size_t i = 0; i < l.size(); ++i) shifted[i] = (l[i] = n(rng)) + c;
            CHECK(select_action(nn::softmax(l), ActionMode::greedy, rng) ==
                  select_action(nn::softmax(shifted), ActionMode::greedy, rng));
        }
    }
}

TEST_SUITE("guided loss") {
    TEST_CASE("hand value") {
        CHECK(std::abs(kl_guided_loss({0.75, 0.25}, {0.5, 0.5}) - 0.130812) < 1e-6);
        CHECK(kl_guided_loss({0.75, 0.25}, {0.5, 0.5}) ==
              doctest::Approx(0.75 * std::log(1.5) + 0.25 * std::log(0.5)).epsilon(1e-14));
    }

    TEST_CASE("zero exactly at the prior, positive elsewhere") {
        Rng rng(11);
        std::uniform_real_distribution<double> u(1e-6, 1.0);
        for (int t = 0; t < 200; ++t) {
            std::vector<double> p(5), q(5);
            for (auto* v : {&p, &q}) {
                double s = 0.0;
                for (double& x : *v) s += (x = u(rng));
                for (double& x : *v) x /= s;
            }
            CHECK(std::abs(kl_guided_loss(p, p)) < 1e-9);
            CHECK(kl_guided_loss(p, q) >= 0.0);
            CHECK(kl_guided_loss(p, q, KlDirection::prior_to_policy) == doctest::Approx(kl_guided_loss(q, p)));
        }
    }

    TEST_CASE("length mismatch is an error") {
        CHECK_THROWS_AS(kl_guided_loss({0.5, 0.5}, {1.0}), ConfigError);
    }

    TEST_CASE("tape version matches the plain formula") {
        const std::vector<double> logits{0.3, -1.2, 0.8}, prior{0.2, 0.3, 0.5};
        for (KlDirection d : {KlDirection::policy_to_prior, KlDirection::prior_to_policy}) {
            Tape tape(false);
            const double v = tape.scalar(kl_guided_loss(tape, tape.constant(nn::row_vector(logits)), prior, d));
            CHECK(v == doctest::Approx(kl_guided_loss(nn::softmax(logits), prior, d)).epsilon(1e-12));
        }
    }
}

TEST_SUITE("gradients") {
    TEST_CASE("policy, critic and guided terms through every fusion mode") {
        Rng rng(12);
        for (FusionMode m : kModes) {
            CAPTURE(to_string(m));
            FusionModel model(micro_config(m));
            model.init(rng);
            const auto e = random_observation(rng, 3, 4, 16);
            const std::vector<double> prior{0.1, 0.2, 0.3, 0.4};
            auto loss = [&](Tape& tape) {
                Var s = build_state(tape, model, e);
                Var logits = policy_logits(tape, model, s);
                Var q1 = model.q1.forward(tape, s), q2 = model.q2.forward(tape, s);
                Var pi = tape.softmax_rows(logits);
                Var actor = tape.sum(tape.mul(pi, tape.scale(tape.log_softmax_rows(logits), 0.2)));
                Var critic = tape.add(tape.square(tape.pick(q1, 0, 1)), tape.square(tape.pick(q2, 0, 2)));
                return tape.add(tape.add(actor, critic), kl_guided_loss(tape, logits, prior));
            };
            const auto r = nn::grad_check(loss, model.online_params());
            CAPTURE(r.worst_param);
            CHECK(r.max_rel_error < 1e-4);
            CHECK(r.checked > 0);
        }
    }
}

TEST_SUITE("config") {
    TEST_CASE("model config round trip and mode names") {
        auto c = micro_config(FusionMode::position_as_key, 32, 4);
        const auto back = ModelConfig::from_json(c.to_json());
        CHECK(back.mode == FusionMode::position_as_key);
        CHECK(back.attention.width == 32);
        CHECK(back.attention.heads == 4);
        CHECK(back.bands == 2);
        CHECK_THROWS_AS(fusion_mode_from_string("concat"), ConfigError);
        CHECK(kl_direction_from_string("prior_to_policy") == KlDirection::prior_to_policy);
    }
}
