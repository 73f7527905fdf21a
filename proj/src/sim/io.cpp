#include "vlg/sim/io.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>

#include <png.h>

#include "vlg/common/errors.hpp"

namespace vlg::sim {

using nlohmann::json;

json spec_to_json(const ObjectSpec& s) {
    return {{"label", s.label},   {"general", s.general}, {"color", s.color},      {"shape", to_string(s.shape)},
            {"length", s.length}, {"width", s.width},     {"height", s.height},    {"functions", s.functions},
            {"split", s.unseen ? "unseen" : "seen"}};
}

ObjectSpec spec_from_json(const json& j) {
    ObjectSpec s;
    s.label = j.at("label").get<std::string>();
    s.general = j.value("general", std::vector<std::string>{});
    s.color = j.at("color").get<std::string>();
    s.shape = shape_from_string(j.at("shape").get<std::string>());
    s.length = j.at("length").get<double>();
    s.width = j.value("width", s.length);
    s.height = j.at("height").get<double>();
    s.functions = j.value("functions", std::vector<std::string>{});
    s.unseen = j.value("split", std::string("seen")) == "unseen";
    return s;
}

json scene_to_json(const Scene& scene) {
    json objects = json::array();
    for (const auto& o : scene.objects)
        objects.push_back({{"uid", o.uid}, {"spec", spec_to_json(o.spec)}, {"x", o.x}, {"y", o.y}, {"yaw", o.yaw}, {"top", o.top}});
    return {{"format", "vlg.scene"},
            {"version", kSceneFormatVersion},
            {"workspace", {{"side", scene.workspace.side}, {"resolution", scene.workspace.resolution}}},
            {"seed", scene.seed},
            {"targets", scene.targets},
            {"objects", objects}};
}

Scene scene_from_json(const json& j) {
    if (j.value("format", "") != "vlg.scene") throw ConfigError("scene: missing format tag 'vlg.scene'");
    if (j.value("version", 0) != kSceneFormatVersion)
        throw ConfigError("scene: unsupported version " + j.value("version", json()).dump());
    Scene s;
    s.workspace.side = j.at("workspace").at("side").get<double>();
    s.workspace.resolution = j.at("workspace").at("resolution").get<int>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.targets = j.at("targets").get<std::vector<int>>();
    for (const auto& o : j.at("objects")) {
        ObjectInstance inst;
        inst.uid = o.at("uid").get<int>();
        inst.spec = spec_from_json(o.at("spec"));
        inst.x = o.at("x").get<double>();
        inst.y = o.at("y").get<double>();
        inst.yaw = o.at("yaw").get<double>();
        if (!s.workspace.contains(inst.x, inst.y))
            throw ConfigError("scene: object " + std::to_string(inst.uid) + " lies outside the workspace");
        s.objects.push_back(std::move(inst));
    }
    for (int t : s.targets)
        if (!s.find(t)) throw ConfigError("scene: target uid " + std::to_string(t) + " does not exist");
    s.settle();
    return s;
}

json instruction_to_json(const Instruction& i) {
    return {{"template_id", i.template_id},
            {"template", i.template_text},
            {"keyword", i.keyword},
            {"type", to_string(i.type)},
            {"text", i.text()}};
}

Instruction instruction_from_json(const json& j) {
    Instruction i;
    i.template_id = j.at("template_id").get<int>();
    i.template_text = j.at("template").get<std::string>();
    i.keyword = j.at("keyword").get<std::string>();
    i.type = keyword_type_from_string(j.at("type").get<std::string>());
    return i;
}

json grasp_to_json(const grasp::GraspPose& g) {
    return {{"position", g.position}, {"yaw", g.yaw}, {"width", g.width}, {"quality", g.quality}};
}

grasp::GraspPose grasp_from_json(const json& j) {
    grasp::GraspPose g;
    g.position = j.at("position").get<Vec3>();
    g.yaw = j.at("yaw").get<double>();
    g.width = j.at("width").get<double>();
    g.quality = j.at("quality").get<double>();
    return g;
}

json box_to_json(const ObjectBox& b) {
    json mix = json::object();
    for (const auto& [k, v] : b.descriptor) mix[k] = v;
    return {{"rect", {b.rect.x0, b.rect.y0, b.rect.x1, b.rect.y1}},
            {"center", b.center},
            {"descriptor", mix},
            {"dominant_uid", b.dominant_uid}};
}

json observation_to_json(const Observation& obs) {
    json boxes = json::array(), grasps = json::array();
    for (const auto& b : obs.boxes) boxes.push_back(box_to_json(b));
    for (const auto& g : obs.grasps) grasps.push_back(grasp_to_json(g));
    return {{"instruction", instruction_to_json(obs.instruction)},
            {"noise_seed", obs.noise_seed},
            {"boxes", boxes},
            {"grasps", grasps}};
}

json episode_to_json(const Episode& e) {
    return {{"format", "vlg.episode"},
            {"version", kSceneFormatVersion},
            {"stage", to_string(e.stage())},
            {"attempts", e.attempts()},
            {"attempt_limit", e.attempt_limit()},
            {"done", e.done()},
            {"success", e.success()},
            {"scene", scene_to_json(e.scene())},
            {"observation", observation_to_json(e.observation())}};
}

namespace {

using Rgb = std::array<unsigned char, 3>;

Rgb color_of(const std::string& name) {
    static const std::map<std::string, Rgb> table{
        {"red", {210, 45, 40}},     {"green", {60, 170, 70}},  {"blue", {50, 90, 200}},
        {"yellow", {235, 205, 40}}, {"purple", {140, 70, 170}}, {"white", {240, 240, 240}},
        {"black", {35, 35, 35}},    {"pink", {240, 140, 180}}, {"orange", {240, 140, 30}},
        {"brown", {130, 85, 45}},   {"gray", {130, 130, 130}}};
    auto it = table.find(name);
    return it == table.end() ? Rgb{160, 160, 160} : it->second;
}

struct Canvas {
    int w, h;
    std::vector<unsigned char> px;
    void set(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= w || y >= h) return;
        auto i = static_cast<std::size_t>((y * w + x) * 3);
        px[i] = c[0], px[i + 1] = c[1], px[i + 2] = c[2];
    }
    void line(double x0, double y0, double x1, double y1, Rgb c) {
        const int n = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
        for (int i = 0; i <= n; ++i) {
            const double t = static_cast<double>(i) / n;
            set(static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
        }
    }
};

}  // namespace

std::vector<unsigned char> render_rgb(const Scene& scene, const RenderOptions& options, int& width, int& height) {
    if (options.scale < 1) throw ConfigError("render: scale must be at least 1");
    const SceneRaster raster = rasterize(scene);
    const int res = raster.resolution, s = options.scale;
    Canvas c{res * s, res * s, std::vector<unsigned char>(static_cast<std::size_t>(res * s * res * s * 3), 0)};
    for (int row = 0; row < res; ++row)
        for (int col = 0; col < res; ++col) {
            const int l = raster.at(row, col);
            Rgb base{205, 185, 150};
            if (l >= 0) {
                const auto& o = scene.objects[static_cast<std::size_t>(l)];
                base = color_of(o.spec.color);
                // shade by height so stacks read in the picture
                const double k = std::min(1.0, 0.75 + 2.0 * o.top);
                for (auto& ch : base) ch = static_cast<unsigned char>(ch * k);
            }
            for (int dy = 0; dy < s; ++dy)
                for (int dx = 0; dx < s; ++dx) c.set(col * s + dx, row * s + dy, base);
        }
    const double px = s / scene.workspace.pixel_size();
    if (options.boxes)
        for (const auto& b : *options.boxes) {
            const double x0 = b.rect.x0 * s, y0 = b.rect.y0 * s, x1 = (b.rect.x1 + 1) * s - 1, y1 = (b.rect.y1 + 1) * s - 1;
            const Rgb cyan{0, 220, 220};
            c.line(x0, y0, x1, y0, cyan), c.line(x1, y0, x1, y1, cyan), c.line(x1, y1, x0, y1, cyan), c.line(x0, y1, x0, y0, cyan);
        }
    for (int t : scene.targets)
        if (const ObjectInstance* o = scene.find(t)) {
            const double cx = o->x * px, cy = o->y * px, r = 4.0 * s;
            for (int k = 0; k < 5; ++k) {
                const double a = -std::numbers::pi / 2 + k * 2 * std::numbers::pi / 5, b = -std::numbers::pi / 2 + (k + 2) * 2 * std::numbers::pi / 5;
                c.line(cx + r * std::cos(a), cy + r * std::sin(a), cx + r * std::cos(b), cy + r * std::sin(b), {255, 255, 0});
            }
        }
    if (options.grasps)
        for (std::size_t k = 0; k < options.grasps->size(); ++k) {
            const auto& g = (*options.grasps)[k];
            const bool hi = static_cast<int>(k) == options.highlight_grasp;
            const double cx = g.position[0] * px, cy = g.position[1] * px, half = 0.5 * g.width * px;
            const double ux = std::cos(g.yaw), uy = std::sin(g.yaw);
            c.line(cx - half * ux, cy - half * uy, cx + half * ux, cy + half * uy, hi ? Rgb{255, 0, 0} : Rgb{20, 20, 20});
        }
    width = c.w;
    height = c.h;
    return std::move(c.px);
}

void write_png(const std::filesystem::path& path, const std::vector<unsigned char>& rgb, int width, int height) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("render: cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("render: libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("render: libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y * width * 3)));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void render_png(const std::filesystem::path& path, const Scene& scene, const RenderOptions& options) {
    int w = 0, h = 0;
    auto rgb = render_rgb(scene, options, w, h);
    write_png(path, rgb, w, h);
}

}  // namespace vlg::sim
