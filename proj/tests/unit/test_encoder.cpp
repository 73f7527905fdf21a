#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "vlg/common/errors.hpp"
#include "vlg/encoder/encoder.hpp"
#include "vlg/sim/scene.hpp"

using namespace vlg;
using namespace vlg::encoder;

namespace {

const sim::WorldData& world() {
    static const sim::WorldData w = sim::WorldData::load(sim::WorldData::default_dir());
    return w;
}

const AlignedEncoder& enc512() {
    static const AlignedEncoder e(world().library, world().keywords, EncoderConfig{});
    return e;
}

sim::Instruction instr(const std::string& keyword, int template_id = 0) {
    return sim::make_instruction(world().keywords, template_id, keyword);
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

const sim::ObjectSpec& spec_of(const std::string& label) {
    for (const auto& s : world().library.specs())
        if (s.label == label) return s;
    throw std::runtime_error("no spec " + label);
}

Tensor2 stack(const std::vector<std::vector<double>>& rows) {
    Tensor2 t(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return t;
}

}  // namespace

TEST_SUITE("concept basis") {
    TEST_CASE("unrelated concepts are near-orthogonal and labels lean to their general label") {
        const auto& b = enc512().basis();
        CHECK(b.width() == 512);
        std::map<std::string, std::set<std::string>> generals;
        for (const auto& s : world().library.specs()) generals[s.label].insert(s.general.begin(), s.general.end());
        auto related = [&](const std::string& a, const std::string& c) {
            auto ga = generals.count(a) ? generals[a] : std::set<std::string>{a};
            auto gc = generals.count(c) ? generals[c] : std::set<std::string>{c};
            ga.insert(a), gc.insert(c);
            for (const auto& x : ga)
                if (gc.count(x)) return true;
            return false;
        };
        const auto names = b.names();
        for (std::size_t i = 0; i < names.size(); ++i)
            for (std::size_t j = i + 1; j < names.size(); ++j)
                if (!related(names[i], names[j])) CHECK(std::abs(cosine(b.at(names[i]), b.at(names[j]))) <= 0.1);
        for (const auto& [label, gens] : generals)
            for (const auto& g : gens) CHECK(cosine(b.at(label), b.at(g)) >= 0.5);
    }

    TEST_CASE("basis is reproducible from its seed and exports to JSON") {
        ConceptBasis a(world().library, world().keywords, 64, 9), c(world().library, world().keywords, 64, 9);
        CHECK(a.to_json() == c.to_json());
        CHECK(a.to_json()["concepts"].size() == a.size());
    }

    TEST_CASE("nearest concept by spelling") {
        CHECK(enc512().basis().nearest("bananna") == "banana");
        CHECK(enc512().basis().nearest("frut") == "fruit");
    }
}

TEST_SUITE("text encoder") {
    TEST_CASE("deterministic and unit norm") {
        auto a = enc512().encode_text(instr("banana", 2)), b = enc512().encode_text(instr("banana", 2));
        CHECK(a == b);
        CHECK(std::abs(norm(a) - 1.0) < 1e-9);
    }

    TEST_CASE("banana is closer to fruit than to red") {
        auto banana = enc512().encode_text(instr("banana")), fruit = enc512().encode_text(instr("fruit"));
        auto red = enc512().encode_text(instr("red"));
        CHECK(cosine(banana, fruit) > cosine(banana, red));
    }

    TEST_CASE("templates perturb the feature by about 0.05") {
        auto a = enc512().encode_text(instr("mug", 0)), b = enc512().encode_text(instr("mug", 1));
        CHECK(a != b);
        CHECK(cosine(a, b) > 0.99);
        CHECK(cosine(a, enc512().basis().at("mug")) == doctest::Approx(1.0 / std::sqrt(1.0 + 0.05 * 0.05)).epsilon(0.01));
    }

    TEST_CASE("unknown keyword: error unless fallback") {
        sim::Instruction ins = instr("banana");
        ins.keyword = "bananna";
        CHECK_THROWS_AS(enc512().encode_text(ins), ConfigError);
        auto fb = enc512().encode_text(ins, true);
        ins.keyword = "banana";
        CHECK(fb == enc512().encode_text(ins));
    }
}

TEST_SUITE("box encoder") {
    TEST_CASE("single-attribute descriptor matches its text at sigma 0") {
        Rng rng(1);
        for (const std::string k : {"red", "banana", "fruit", "eat", "round"}) {
            auto box = enc512().encode_box({{k, 1.0}}, 0.0, rng);
            CHECK(std::abs(norm(box) - 1.0) < 1e-9);
            CHECK(cosine(box, enc512().encode_text(instr(k))) >= 0.95);
        }
    }

    TEST_CASE("an unrelated object scores low against the keyword") {
        Rng rng(1);
        auto mug = enc512().encode_box(spec_of("mug").attributes(), 0.0, rng);
        CHECK(cosine(mug, enc512().encode_text(instr("banana"))) <= 0.3);
        auto sponge = enc512().encode_box(spec_of("sponge").attributes(), 0.0, rng);
        CHECK(cosine(sponge, enc512().encode_text(instr("hammer"))) <= 0.3);
    }

    TEST_CASE("noise is unit norm and reproducible per seed") {
        AlignedEncoder e(enc512().basis(), 0.6);
        Rng a(3), b(3);
        auto x = e.encode_box(spec_of("apple").attributes(), a), y = e.encode_box(spec_of("apple").attributes(), b);
        CHECK(x == y);
        CHECK(std::abs(norm(x) - 1.0) < 1e-9);
    }

    TEST_CASE("encode_boxes keeps an object's noise across calls") {
        AlignedEncoder e(enc512().basis(), 0.3);
        sim::ObjectBox b1, b2;
        b1.descriptor = spec_of("apple").attributes();
        b1.dominant_uid = 4;
        b2.descriptor = spec_of("mug").attributes();
        b2.dominant_uid = 7;
        Tensor2 both = e.encode_boxes({b1, b2}, 55);
        Tensor2 alone = e.encode_boxes({b2}, 55);
        CHECK(both.row(1) == alone.row(0));
        CHECK(e.encode_boxes({b1}, 56).row(0) != both.row(0));
    }
}

TEST_SUITE("fusion") {
    TEST_CASE("visual-language product") {
        Tensor2 boxes = stack({{1, 2, 3, 4}, {-1, 0.5, 0, 2}, {0.25, -3, 1, 1}});
        CHECK(fuse_visual_language(boxes, {1, 1, 1, 1}) == boxes);
        CHECK(fuse_visual_language(boxes, {0, 0, 0, 0}).isZero(0.0));
        const std::vector<double> lang{2, -1, 0.5, 0};
        Tensor2 v = fuse_visual_language(boxes, lang);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) CHECK(v(i, j) == boxes(i, j) * lang[static_cast<std::size_t>(j)]);
        CHECK_THROWS_AS(fuse_visual_language(boxes, {1, 2}), ConfigError);
    }

    TEST_CASE("zero position MLP leaves keys equal to box features") {
        PositionEncoder pos("pos", 6, 4);
        Tensor2 boxes = stack({{1, 2, 3, 4}, {-1, 0.5, 0, 2}});
        nn::Tape tape(false);
        CHECK(tape.value(fuse_visual_position(tape, boxes, {{0.1, 0.2, 0.0}, {0.5, 0.5, 0.1}}, pos)) == boxes);
    }

    TEST_CASE("moving one centre changes only its key") {
        Rng rng(2);
        PositionEncoder pos("pos", 6, 8);
        pos.init(rng);
        Tensor2 boxes = Tensor2::Random(3, 8);
        std::vector<sim::Vec3> c{{0.1, 0.2, 0.0}, {0.4, 0.4, 0.05}, {0.7, 0.1, 0.02}};
        nn::Tape t1(false), t2(false);
        Tensor2 a = t1.value(fuse_visual_position(t1, boxes, c, pos));
        c[1][0] += 0.05;
        Tensor2 b = t2.value(fuse_visual_position(t2, boxes, c, pos));
        CHECK(a.row(0) == b.row(0));
        CHECK(a.row(2) == b.row(2));
        CHECK((a.row(1) - b.row(1)).norm() > 1e-6);
    }

    TEST_CASE("keys match encode + MLP + add computed by hand") {
        Rng rng(4);
        PositionEncoder pos("pos", 2, 3);
        pos.init(rng);
        Tensor2 boxes = stack({{0.3, -0.2, 0.9}});
        const sim::Vec3 c{0.25, 0.6, 0.05};
        std::vector<double> pe;
        for (int axis = 0; axis < 3; ++axis)
            for (int l = 0; l < 2; ++l) {
                const double arg = std::pow(2.0, l) * std::numbers::pi * c[static_cast<std::size_t>(axis)];
                pe.push_back(std::sin(arg));
                pe.push_back(std::cos(arg));
            }
        const auto& l1 = pos.mlp.layers[0];
        const auto& l2 = pos.mlp.layers[1];
        std::vector<double> h(3);
        for (int o = 0; o < 3; ++o) {
            double s = l1.bias.value(0, o);
            for (int i = 0; i < 12; ++i) s += l1.weight.value(o, i) * pe[static_cast<std::size_t>(i)];
            h[static_cast<std::size_t>(o)] = std::max(0.0, s);
        }
        nn::Tape tape(false);
        Tensor2 k = tape.value(fuse_visual_position(tape, boxes, {c}, pos));
        for (int o = 0; o < 3; ++o) {
            double s = l2.bias.value(0, o);
            for (int i = 0; i < 3; ++i) s += l2.weight.value(o, i) * h[static_cast<std::size_t>(i)];
            CHECK(k(0, o) == doctest::Approx(boxes(0, o) + s).epsilon(1e-13));
        }
    }
}

TEST_SUITE("grounding") {
    TEST_CASE("single box and identical boxes") {
        std::vector<double> lang{0.6, 0.8};
        CHECK(ground_probabilities(stack({{1.0, 0.0}}), lang)[0] == 1.0);
        auto p = ground_probabilities(stack({{1.0, 2.0}, {1.0, 2.0}}), lang);
        CHECK(p[0] == doctest::Approx(0.5));
        CHECK(p[1] == doctest::Approx(0.5));
        CHECK_THROWS_AS(ground_probabilities(Tensor2(0, 2), lang), ConfigError);
    }

    TEST_CASE("noise-free scattered scenes: the top box is a target") {
        Rng rng(21);
        for (int t = 0; t < 200; ++t) {
            auto ins = sim::sample_instruction(rng, world().keywords);
            auto scene = sim::sample_scene(rng, 6, world().library, sim::Workspace{}, &ins);
            auto boxes = sim::detect_boxes(scene);
            auto p = ground_probabilities(enc512().encode_boxes(boxes, rng()), enc512().encode_text(ins));
            const auto best = std::max_element(p.begin(), p.end()) - p.begin();
            CHECK_MESSAGE(scene.is_target(boxes[static_cast<std::size_t>(best)].dominant_uid), ins.text());
        }
    }

    TEST_CASE("top-1 grounding accuracy does not improve with more noise") {
        const ConceptBasis basis(world().library, world().keywords, 64, 3);
        std::vector<double> acc;
        for (double sigma : {0.0, 0.3, 0.6}) {
            AlignedEncoder e(basis, sigma);
            Rng rng(77);  // same scenes for every level
            int hits = 0, total = 0;
            for (int t = 0; t < 1000; ++t) {
                auto ins = sim::sample_instruction(rng, world().keywords);
                auto scene = sim::sample_scene(rng, 6, world().library, sim::Workspace{}, &ins);
                auto boxes = sim::detect_boxes(scene);
                auto p = ground_probabilities(e.encode_boxes(boxes, rng()), e.encode_text(ins));
                const auto best = std::max_element(p.begin(), p.end()) - p.begin();
                hits += scene.is_target(boxes[static_cast<std::size_t>(best)].dominant_uid);
                ++total;
            }
            acc.push_back(static_cast<double>(hits) / total);
        }
        MESSAGE("accuracy at 0/0.3/0.6: ", acc[0], " ", acc[1], " ", acc[2]);
        CHECK(acc[0] == 1.0);
        CHECK(acc[1] <= acc[0]);
        CHECK(acc[2] <= acc[1]);
        CHECK(acc[2] < acc[0]);
    }
}
