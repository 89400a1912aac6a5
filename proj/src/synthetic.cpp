#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "afford/data.hpp"

namespace afford::data {

namespace {

// splitmix64; per-pixel noise and per-sample streams must be reproducible
inline unsigned long long mix64(unsigned long long x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct Rng {
    unsigned long long state;
    explicit Rng(unsigned long long seed) : state(mix64(seed)) {}
    double uniform() {  // [0, 1)
        state = mix64(state);
        return (state >> 11) * 0x1.0p-53;
    }
    double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int pick(int n) { return static_cast<int>(uniform() * n) % n; }
};

struct Prim {
    bool ellipse = false;
    double cx = 0, cy = 0, hx = 0, hy = 0;  // offsets/extents in units of L
    double height = 0.5;                    // depth value
    float r = 0.5f, g = 0.5f, b = 0.5f;
    bool is_region = false;                 // contributes to the GT rule region
};

// 90-degree orientation steps around the object center
Prim orient(const Prim& p, int o) {
    Prim q = p;
    switch (o & 3) {
        case 0: break;
        case 1: q.cx = -p.cy; q.cy = p.cx; q.hx = p.hy; q.hy = p.hx; break;
        case 2: q.cx = -p.cx; q.cy = -p.cy; break;
        case 3: q.cx = p.cy; q.cy = -p.cx; q.hx = p.hy; q.hy = p.hx; break;
    }
    return q;
}

struct PartColors {
    float body[3];
    float accent[3];
};

PartColors sample_colors(Rng& rng) {
    PartColors c{};
    // bodies cool-leaning and varied, functional parts in a warm family
    c.body[0] = static_cast<float>(rng.range(0.25, 0.55));
    c.body[1] = static_cast<float>(rng.range(0.35, 0.70));
    c.body[2] = static_cast<float>(rng.range(0.45, 0.85));
    c.accent[0] = static_cast<float>(rng.range(0.70, 0.95));
    c.accent[1] = static_cast<float>(rng.range(0.45, 0.70));
    c.accent[2] = static_cast<float>(rng.range(0.15, 0.35));
    return c;
}

std::vector<Prim> build_scene(const std::string& archetype, const std::string& action,
                              Rng& rng) {
    const PartColors col = sample_colors(rng);
    auto body = [&](Prim p) {
        p.r = col.body[0]; p.g = col.body[1]; p.b = col.body[2];
        return p;
    };
    auto accent = [&](Prim p) {
        p.r = col.accent[0]; p.g = col.accent[1]; p.b = col.accent[2];
        return p;
    };

    std::vector<Prim> prims;
    if (archetype == "mallet") {
        // elongated head orthogonal to a thin raised handle
        Prim head;  head.ellipse = true;  head.cx = 0.31; head.cy = 0;
        head.hx = 0.14; head.hy = 0.24; head.height = 0.55;
        Prim handle; handle.cx = -0.19; handle.cy = 0;
        handle.hx = 0.31; handle.hy = 0.055; handle.height = 0.85;
        handle.is_region = (action == "hold");
        prims.push_back(body(head));
        prims.push_back(accent(handle));
    } else if (archetype == "stool") {
        Prim slab; slab.cx = 0; slab.cy = -0.18; slab.hx = 0.42; slab.hy = 0.075;
        slab.height = 0.8;
        Prim leg1; leg1.cx = -0.30; leg1.cy = 0.12; leg1.hx = 0.05; leg1.hy = 0.24;
        leg1.height = 0.45;
        Prim leg2 = leg1; leg2.cx = 0.30;
        Prim top; top.cx = 0; top.cy = -0.215; top.hx = 0.42; top.hy = 0.04;
        top.height = 0.85; top.is_region = (action == "sit");
        prims.push_back(body(leg1));
        prims.push_back(body(leg2));
        prims.push_back(body(slab));
        prims.push_back(accent(top));
    } else if (archetype == "pitcher") {
        Prim bodyp; bodyp.ellipse = true; bodyp.cx = 0; bodyp.cy = 0.10;
        bodyp.hx = 0.28; bodyp.hy = 0.34; bodyp.height = 0.55;
        Prim neck; neck.cx = 0; neck.cy = -0.24; neck.hx = 0.14; neck.hy = 0.10;
        neck.height = 0.6;
        Prim rim; rim.ellipse = true; rim.cx = 0; rim.cy = -0.33;
        rim.hx = 0.20; rim.hy = 0.06; rim.height = 0.9;
        rim.is_region = (action == "pour");
        Prim grip; grip.ellipse = true; grip.cx = 0; grip.cy = 0.22;
        grip.hx = 0.22; grip.hy = 0.13; grip.height = 0.7;
        grip.is_region = (action == "hold");
        prims.push_back(body(bodyp));
        prims.push_back(body(neck));
        prims.push_back(accent(rim));
        prims.push_back(grip.is_region ? accent(grip) : body(grip));
    } else if (archetype == "plank") {
        Prim slab; slab.cx = 0; slab.cy = 0; slab.hx = 0.5; slab.hy = 0.09;
        slab.height = 0.6;
        Prim face; face.cx = 0; face.cy = 0; face.hx = 0.18; face.hy = 0.09;
        face.height = 0.8; face.is_region = (action == "ride");
        prims.push_back(body(slab));
        prims.push_back(accent(face));
    } else if (archetype == "orb") {
        Prim ball; ball.ellipse = true; ball.cx = 0; ball.cy = 0;
        ball.hx = 0.30; ball.hy = 0.30; ball.height = 0.7;
        Prim kick; kick.ellipse = true; kick.cx = 0; kick.cy = 0.19;
        kick.hx = 0.19; kick.hy = 0.10; kick.height = 0.75;
        kick.is_region = (action == "kick");
        prims.push_back(body(ball));
        prims.push_back(accent(kick));
    } else {
        throw std::invalid_argument("generate_synthetic: unknown archetype: " + archetype);
    }
    return prims;
}

// 2x2 supersampled coverage of a primitive at pixel (px, py)
double coverage(const Prim& p, double cx_px, double cy_px, double L, int px, int py) {
    const double hx = std::max(p.hx * L, 1.5);
    const double hy = std::max(p.hy * L, 1.5);
    const double ox = cx_px + p.cx * L;
    const double oy = cy_px + p.cy * L;
    int hit = 0;
    for (int sy = 0; sy < 2; ++sy) {
        for (int sx = 0; sx < 2; ++sx) {
            const double x = px + 0.25 + 0.5 * sx - ox;
            const double y = py + 0.25 + 0.5 * sy - oy;
            bool inside;
            if (p.ellipse)
                inside = (x / hx) * (x / hx) + (y / hy) * (y / hy) <= 1.0;
            else
                inside = std::fabs(x) <= hx && std::fabs(y) <= hy;
            hit += inside;
        }
    }
    return hit / 4.0;
}

void gaussian_blur_inplace(DenseMap& map, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        ksum += kernel[i + radius];
    }
    for (auto& k : kernel) k /= ksum;

    DenseMap tmp(map.height(), map.width());
    for (int r = 0; r < map.height(); ++r)
        for (int c = 0; c < map.width(); ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * map.at(r, std::clamp(c + i, 0, map.width() - 1));
            tmp.at(r, c) = acc;
        }
    for (int r = 0; r < map.height(); ++r)
        for (int c = 0; c < map.width(); ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at(std::clamp(r + i, 0, map.height() - 1), c);
            map.at(r, c) = acc;
        }
}

}  // namespace

std::vector<std::string> synthetic_archetype_catalog() {
    return {"mallet", "stool", "pitcher", "plank", "orb"};
}

std::vector<std::string> synthetic_actions_for(const std::string& archetype) {
    if (archetype == "mallet") return {"hold"};
    if (archetype == "stool") return {"sit"};
    if (archetype == "pitcher") return {"pour", "hold"};
    if (archetype == "plank") return {"ride"};
    if (archetype == "orb") return {"kick"};
    throw std::invalid_argument("unknown archetype: " + archetype);
}

std::vector<std::string> synthetic_text_corpus() {
    std::vector<std::string> corpus;
    for (const auto& arch : synthetic_archetype_catalog()) {
        for (const auto& action : synthetic_actions_for(arch)) {
            for (auto v : {PromptVariant::Hi, PromptVariant::Action, PromptVariant::ObjectAction,
                           PromptVariant::Full})
                corpus.push_back(build_prompt(arch, action, v));
        }
    }
    corpus.push_back(target_answer_template());
    return corpus;
}

std::vector<Sample> generate_synthetic(const SyntheticConfig& config) {
    if (config.n_samples < 1) throw std::invalid_argument("generate_synthetic: n_samples < 1");
    if (config.image_size < 16) throw std::invalid_argument("generate_synthetic: image_size < 16");
    if (config.archetypes.empty())
        throw std::invalid_argument("generate_synthetic: empty archetype inventory");
    for (const auto& a : config.archetypes) synthetic_actions_for(a);  // validates names

    const int S = config.image_size;
    std::vector<Sample> samples;
    samples.reserve(config.n_samples);

    for (int idx = 0; idx < config.n_samples; ++idx) {
        Rng rng(mix64(config.seed * 0x51f15eedull + 0xabcd0000ull + idx));
        const std::string archetype = config.archetypes[idx % config.archetypes.size()];
        const auto actions = synthetic_actions_for(archetype);
        const std::string action = actions[rng.pick(static_cast<int>(actions.size()))];

        const double L = rng.range(0.52, 0.78) * S;
        const double cx = rng.range(0.33, 0.67) * S;
        const double cy = rng.range(0.33, 0.67) * S;
        const int o = rng.pick(4);

        std::vector<Prim> prims;
        for (const auto& p : build_scene(archetype, action, rng)) prims.push_back(orient(p, o));

        Sample s;
        s.sample_id = "syn_" + archetype + "_" + action + "_" +
                      (idx < 1000 ? std::string(idx < 100 ? (idx < 10 ? "000" : "00") : "0") : "") +
                      std::to_string(idx);
        s.object_name = archetype;
        s.action_name = action;
        s.image = ImageRGB(S, S);
        s.gt_map = DenseMap(S, S);
        ImageGray depth(S, S);

        const unsigned long long noise_key = mix64(config.seed ^ (0x777ull + idx));
        for (int y = 0; y < S; ++y) {
            for (int x = 0; x < S; ++x) {
                // background: dark with a vertical ramp and hash noise
                const double n =
                    ((mix64(noise_key ^ (static_cast<unsigned long long>(y) << 20 ^ x)) >> 11) *
                         0x1.0p-53 -
                     0.5) *
                    0.06;
                float pr = static_cast<float>(0.13 + 0.05 * y / S + n);
                float pg = static_cast<float>(0.15 + 0.05 * y / S + n);
                float pb = static_cast<float>(0.18 + 0.04 * y / S + n);
                double h = 0.04 + 0.05 * static_cast<double>(y) / S;
                double region = 0.0;

                for (const auto& p : prims) {
                    const double cov = coverage(p, cx, cy, L, x, y);
                    if (cov <= 0.0) continue;
                    const float fc = static_cast<float>(cov);
                    pr = pr * (1 - fc) + p.r * fc;
                    pg = pg * (1 - fc) + p.g * fc;
                    pb = pb * (1 - fc) + p.b * fc;
                    h = std::max(h, p.height * cov + h * (1 - cov));
                    if (p.is_region) region = std::max(region, cov);
                }
                s.image.at(y, x, 0) = std::clamp(pr, 0.0f, 1.0f);
                s.image.at(y, x, 1) = std::clamp(pg, 0.0f, 1.0f);
                s.image.at(y, x, 2) = std::clamp(pb, 0.0f, 1.0f);
                depth.at(y, x) = static_cast<float>(std::clamp(h, 0.0, 1.0));
                s.gt_map.at(y, x) = region;
            }
        }

        if (s.gt_map.sum() <= 0.0)
            throw std::logic_error("generate_synthetic: degenerate GT for " + s.sample_id);
        gaussian_blur_inplace(s.gt_map, S / 48.0);
        const double mx = s.gt_map.max_value();
        for (std::size_t i = 0; i < s.gt_map.size(); ++i) s.gt_map[i] /= mx;

        if (config.with_depth) s.depth = std::move(depth);
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace afford::data
