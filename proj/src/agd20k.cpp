#include <algorithm>
#include <iostream>

#include "afford/data.hpp"
#include "afford/image_io.hpp"

namespace afford::data {

namespace fs = std::filesystem;

ImageGray load_depth(const fs::path& path) {
    if (!fs::exists(path)) throw std::runtime_error("depth file missing: " + path.string());
    ImageGray raw = load_gray_png(path);
    float lo = raw.pixels[0], hi = raw.pixels[0];
    for (float v : raw.pixels) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo <= 0.0f) {
        std::fill(raw.pixels.begin(), raw.pixels.end(), 0.0f);  // constant-map convention
        return raw;
    }
    const float inv = 1.0f / (hi - lo);
    for (float& v : raw.pixels) v = (v - lo) * inv;
    return raw;
}

namespace {

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

}  // namespace

std::vector<Sample> load_agd20k(const fs::path& root, const splits::SplitSpec& split,
                                SplitRole role, bool want_depth,
                                std::vector<std::string>* warnings) {
    split.validate();
    const std::string role_dir = role == SplitRole::Train ? "train" : "test";
    const fs::path image_root = root / role_dir;
    if (!fs::is_directory(image_root))
        throw std::runtime_error("load_agd20k: missing directory " + image_root.string());

    const auto& keep = role == SplitRole::Train ? split.train_classes : split.test_classes;
    auto warn = [&](const std::string& msg) {
        if (warnings)
            warnings->push_back(msg);
        else
            std::cerr << "[load_agd20k] " << msg << "\n";
    };

    std::vector<Sample> samples;
    for (const auto& action_entry : fs::directory_iterator(image_root)) {
        if (!action_entry.is_directory()) continue;
        const std::string action = action_entry.path().filename().string();
        for (const auto& object_entry : fs::directory_iterator(action_entry.path())) {
            if (!object_entry.is_directory()) continue;
            const std::string object_raw = object_entry.path().filename().string();
            const std::string object = splits::normalize_class_name(object_raw);
            const bool in_split =
                split.train_classes.count(object) || split.test_classes.count(object);
            if (!in_split) {
                warn("unknown class directory skipped: " + object_raw);
                continue;
            }
            if (!keep.count(object)) continue;

            for (const auto& file : fs::directory_iterator(object_entry.path())) {
                if (!file.is_regular_file() || !is_image_file(file.path())) continue;
                const std::string stem = file.path().stem().string();
                Sample s;
                s.sample_id = role_dir + "/" + action + "/" + object_raw + "/" + stem;
                s.object_name = object;
                s.action_name = action;
                s.split_role = role;
                s.image = load_image(file.path());

                const fs::path gt_path = root / "annotations" / action / object_raw / (stem + ".png");
                if (fs::exists(gt_path)) {
                    s.gt_map = load_map_png(gt_path);
                } else if (role == SplitRole::Train) {
                    throw std::runtime_error("load_agd20k: missing GT for training sample " +
                                             s.sample_id + " (expected " + gt_path.string() + ")");
                } else {
                    warn("test sample without GT kept for prediction only: " + s.sample_id);
                    s.gt_map = DenseMap(1, 1, 0.0);
                }

                if (want_depth) {
                    const fs::path depth_path =
                        root / "depth" / role_dir / action / object_raw / (stem + ".png");
                    s.depth = load_depth(depth_path);
                }
                samples.push_back(std::move(s));
            }
        }
    }
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.sample_id < b.sample_id; });
    return samples;
}

}  // namespace afford::data
