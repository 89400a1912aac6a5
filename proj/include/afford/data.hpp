#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "afford/dense_map.hpp"
#include "afford/image.hpp"
#include "afford/splits.hpp"

namespace afford::data {

enum class PromptVariant { Hi, Action, ObjectAction, Full };

PromptVariant prompt_variant_from_string(const std::string& s);
std::string prompt_variant_to_string(PromptVariant v);

/// Full  -> "What part of the {object} should we interact with in order to {action} it?"
/// ObjectAction -> "{action}, {object}"   Action -> "{action}"   Hi -> "Hi"
std::string build_prompt(const std::string& object_name, const std::string& action_name,
                         PromptVariant variant);

/// The templated answer the language model is trained to emit; carries
/// exactly one <mask_token>.
std::string target_answer_template();

enum class SplitRole { Train, Test };

struct Sample {
    std::string sample_id;
    ImageRGB image;
    std::optional<ImageGray> depth;
    std::string object_name;
    std::string action_name;
    DenseMap gt_map;
    SplitRole split_role = SplitRole::Train;
};

/// Loads a single-channel depth PNG and minmax-normalizes it to [0,1]
/// (constant files collapse to zeros, same convention as dense maps).
ImageGray load_depth(const std::filesystem::path& path);

/// AGD20K-layout loader. Expected tree:
///   <root>/<role>/<action>/<object>/<id>.(jpg|jpeg|png)
///   <root>/annotations/<action>/<object>/<id>.png         (GT heatmap)
///   <root>/depth/<role>/<action>/<object>/<id>.png        (optional)
/// Keeps only samples whose object class sits on the requested side of the
/// split. Missing GT for a train-role sample is an error; object directories
/// not named in the split are skipped with a warning. sample_ids are stable
/// and the result is sorted by sample_id.
std::vector<Sample> load_agd20k(const std::filesystem::path& root,
                                const splits::SplitSpec& split, SplitRole role,
                                bool want_depth, std::vector<std::string>* warnings = nullptr);

// Synthetic desk-scale dataset. Each archetype pairs a parametric shape
// with action rules mapping to a GT region; depth renders the shape's
// coarse height field.
struct SyntheticConfig {
    int n_samples = 64;
    int image_size = 96;
    std::vector<std::string> archetypes = {"mallet", "stool", "pitcher"};
    unsigned long long seed = 7;
    bool with_depth = true;
};

/// Built-in archetype catalog: mallet (hold -> handle), stool (sit -> top),
/// pitcher (pour -> rim, hold -> body), plank (ride -> top face),
/// orb (kick -> lower front).
std::vector<std::string> synthetic_archetype_catalog();
std::vector<std::string> synthetic_actions_for(const std::string& archetype);

std::vector<Sample> generate_synthetic(const SyntheticConfig& config);

/// Words needed to tokenize every prompt/answer the synthetic data can emit.
std::vector<std::string> synthetic_text_corpus();

}  // namespace afford::data
