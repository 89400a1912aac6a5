#include "afford/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <vector>

#include "afford/image_io.hpp"
#include "afford/metrics.hpp"
#include "json.hpp"

namespace afford::report {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Canvas {
    int h, w;
    std::vector<float> px;  // rgb

    Canvas(int h_, int w_) : h(h_), w(w_), px(static_cast<std::size_t>(h_) * w_ * 3, 1.0f) {}

    void set(int y, int x, float r, float g, float b) {
        if (y < 0 || y >= h || x < 0 || x >= w) return;
        float* p = px.data() + (static_cast<std::size_t>(y) * w + x) * 3;
        p[0] = r;
        p[1] = g;
        p[2] = b;
    }

    void line(int y0, int x0, int y1, int x1, float r, float g, float b) {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            set(y0, x0, r, g, b);
            if (x0 == x1 && y0 == y1) break;
            const int e2 = 2 * err;
            if (e2 >= dy) { err += dy; x0 += sx; }
            if (e2 <= dx) { err += dx; y0 += sy; }
        }
    }

    ImageRGB to_image() const {
        ImageRGB img(h, w);
        img.pixels = px;
        return img;
    }
};

// blue -> cyan -> yellow -> red heat ramp
void heat_color(double v, float& r, float& g, float& b) {
    v = std::clamp(v, 0.0, 1.0);
    if (v < 1.0 / 3) {
        const float t = static_cast<float>(v * 3);
        r = 0.05f; g = 0.2f + 0.6f * t; b = 0.6f + 0.4f * t;
    } else if (v < 2.0 / 3) {
        const float t = static_cast<float>((v - 1.0 / 3) * 3);
        r = 0.05f + 0.9f * t; g = 0.8f + 0.15f * t; b = 1.0f - 0.9f * t;
    } else {
        const float t = static_cast<float>((v - 2.0 / 3) * 3);
        r = 0.95f + 0.05f * t; g = 0.95f - 0.8f * t; b = 0.1f - 0.05f * t;
    }
}

ImageRGB heatmap_image(const DenseMap& map) {
    const DenseMap norm = minmax_normalize(map);
    ImageRGB img(map.height(), map.width());
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x) {
            float r, g, b;
            heat_color(norm.at(y, x), r, g, b);
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
    return img;
}

ImageRGB hstack(const std::vector<ImageRGB>& imgs, int gap = 2) {
    int h = 0, w = 0;
    for (const auto& im : imgs) {
        h = std::max(h, im.height);
        w += im.width;
    }
    w += gap * (static_cast<int>(imgs.size()) - 1);
    ImageRGB out(h, w, 1.0f);
    int at = 0;
    for (const auto& im : imgs) {
        for (int y = 0; y < im.height; ++y)
            for (int x = 0; x < im.width; ++x)
                for (int c = 0; c < 3; ++c) out.at(y, at + x, c) = im.at(y, x, c);
        at += im.width + gap;
    }
    return out;
}

struct LossRow {
    int step;
    double l_aff, l_text, total;
};

std::vector<LossRow> read_train_log(const fs::path& path) {
    std::ifstream in(path);
    std::vector<LossRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        rows.push_back({j.at("step").get<int>(), j.at("l_aff").get<double>(),
                        j.at("l_text").get<double>(), j.at("total").get<double>()});
    }
    return rows;
}

void draw_loss_curve(const std::vector<LossRow>& rows, const fs::path& out_png) {
    const int H = 240, W = 480, m = 24;
    Canvas cv(H, W);
    cv.line(H - m, m, H - m, W - m, 0.2f, 0.2f, 0.2f);  // x axis
    cv.line(m, m, H - m, m, 0.2f, 0.2f, 0.2f);          // y axis
    double lo = 1e300, hi = -1e300;
    for (const auto& r : rows) {
        lo = std::min({lo, r.total, r.l_aff});
        hi = std::max({hi, r.total, r.l_aff});
    }
    if (!(hi > lo)) hi = lo + 1.0;
    auto ymap = [&](double v) {
        return static_cast<int>((H - m) - (v - lo) / (hi - lo) * (H - 2 * m));
    };
    auto xmap = [&](std::size_t i) {
        return static_cast<int>(m + static_cast<double>(i) / std::max<std::size_t>(1, rows.size() - 1) *
                                        (W - 2 * m));
    };
    for (std::size_t i = 1; i < rows.size(); ++i) {
        cv.line(ymap(rows[i - 1].total), xmap(i - 1), ymap(rows[i].total), xmap(i), 0.85f, 0.25f,
                0.15f);
        cv.line(ymap(rows[i - 1].l_aff), xmap(i - 1), ymap(rows[i].l_aff), xmap(i), 0.15f, 0.35f,
                0.8f);
    }
    save_image_png(cv.to_image(), out_png);
}

std::string fmt3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

}  // namespace

void write_run_report(const fs::path& run_dir, const std::optional<fs::path>& compare_dir) {
    std::vector<std::string> missing;
    const fs::path manifest_path = run_dir / "manifest.json";
    const fs::path log_path = run_dir / "train_log.jsonl";
    const fs::path report_path = run_dir / "report.json";
    if (!fs::exists(manifest_path)) missing.push_back(manifest_path.string());
    if (!fs::exists(log_path)) missing.push_back(log_path.string());
    if (!fs::exists(report_path)) missing.push_back(report_path.string());
    if (compare_dir) {
        if (!fs::exists(*compare_dir / "report.json"))
            missing.push_back((*compare_dir / "report.json").string());
        if (!fs::exists(*compare_dir / "manifest.json"))
            missing.push_back((*compare_dir / "manifest.json").string());
    }
    if (!missing.empty()) {
        std::string msg = "report: missing run artifacts:";
        for (const auto& s : missing) msg += "\n  " + s;
        throw std::runtime_error(msg);
    }

    json manifest, reports;
    {
        std::ifstream mf(manifest_path), rf(report_path);
        mf >> manifest;
        rf >> reports;
    }

    const auto rows = read_train_log(log_path);
    if (!rows.empty()) draw_loss_curve(rows, run_dir / "loss_curve.png");

    // heatmap panels from the eval dump: <id>_img.png / _gt.png / _pred.png
    std::vector<std::string> panel_files;
    const fs::path panel_dir = run_dir / "panels";
    int n_panels = 0;
    if (fs::is_directory(panel_dir)) {
        std::set<std::string> stems;
        for (const auto& e : fs::directory_iterator(panel_dir)) {
            const std::string name = e.path().filename().string();
            const auto pos = name.rfind("_img.png");
            if (pos != std::string::npos) stems.insert(name.substr(0, pos));
        }
        for (const auto& stem : stems) {
            const fs::path img_p = panel_dir / (stem + "_img.png");
            const fs::path gt_p = panel_dir / (stem + "_gt.png");
            const fs::path pred_p = panel_dir / (stem + "_pred.png");
            if (!fs::exists(gt_p) || !fs::exists(pred_p)) continue;
            ImageRGB img = load_image(img_p);
            ImageRGB gt = heatmap_image(load_map_png(gt_p));
            ImageRGB pred = heatmap_image(load_map_png(pred_p));
            const fs::path out = panel_dir / (stem + "_panel.png");
            save_image_png(hstack({img, gt, pred}), out);
            panel_files.push_back("panels/" + stem + "_panel.png");
            n_panels++;
        }
    }

    std::ofstream md(run_dir / "report.md");
    md << "# Run report\n\n";
    md << "- steps: " << manifest.value("steps_run", 0) << "\n";
    md << "- wall seconds: " << fmt3(manifest.value("wall_seconds", 0.0)) << "\n";
    const auto& forced = manifest["forced_token"];
    md << "- forced mask-token rate: " << fmt3(forced.value("rate", 0.0)) << " ("
       << forced.value("forced", 0) << "/" << forced.value("checked", 0) << ")\n";
    md << "- config hash: " << manifest.value("config_hash", 0ull) << "\n\n";

    md << "## Losses\n\n";
    md << "step 0: total " << fmt3(manifest["step0"].value("total", 0.0)) << " (aff "
       << fmt3(manifest["step0"].value("l_aff", 0.0)) << ", text "
       << fmt3(manifest["step0"].value("l_text", 0.0)) << ")\n\n";
    md << "final:  total " << fmt3(manifest["final"].value("total", 0.0)) << " (aff "
       << fmt3(manifest["final"].value("l_aff", 0.0)) << ", text "
       << fmt3(manifest["final"].value("l_text", 0.0)) << ")\n\n";
    if (!rows.empty()) md << "![loss curve](loss_curve.png)\n\n";

    auto metric_cols = [](const json& rep) {
        return std::array<std::string, 3>{fmt3(rep.value("mean_kld", 0.0)),
                                          fmt3(rep.value("mean_sim", 0.0)),
                                          fmt3(rep.value("mean_nss", 0.0))};
    };

    md << "## Metrics\n\n";
    if (!compare_dir) {
        md << "| set | KLD v | SIM ^ | NSS ^ |\n|---|---|---|---|\n";
        for (const auto& [name, rep] : reports.items()) {
            const auto c = metric_cols(rep);
            md << "| " << name << " | " << c[0] << " | " << c[1] << " | " << c[2] << " |\n";
        }
    } else {
        json reports_b, manifest_b;
        {
            std::ifstream rf(*compare_dir / "report.json"), mf(*compare_dir / "manifest.json");
            rf >> reports_b;
            mf >> manifest_b;
        }
        auto label = [](const json& m) {
            const bool depth = m["config"]["model"].value("use_depth", false);
            return std::string(depth ? "depth on" : "depth off");
        };
        md << "| set | " << label(manifest) << " (KLD/SIM/NSS) | " << label(manifest_b)
           << " (KLD/SIM/NSS) |\n|---|---|---|\n";
        for (const auto& [name, rep] : reports.items()) {
            const auto a = metric_cols(rep);
            md << "| " << name << " | " << a[0] << " / " << a[1] << " / " << a[2] << " | ";
            if (reports_b.contains(name)) {
                const auto b = metric_cols(reports_b[name]);
                md << b[0] << " / " << b[1] << " / " << b[2];
            } else {
                md << "-";
            }
            md << " |\n";
        }
    }
    md << "\n";

    if (n_panels > 0) {
        md << "## Sample panels (image / GT / prediction)\n\n";
        for (const auto& f : panel_files) md << "![panel](" << f << ")\n\n";
    }
}

}  // namespace afford::report
