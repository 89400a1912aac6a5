#include <stdexcept>

#include "afford/data.hpp"

namespace afford::data {

PromptVariant prompt_variant_from_string(const std::string& s) {
    if (s == "hi") return PromptVariant::Hi;
    if (s == "action") return PromptVariant::Action;
    if (s == "object_action") return PromptVariant::ObjectAction;
    if (s == "full") return PromptVariant::Full;
    throw std::invalid_argument("unknown prompt variant: " + s +
                                " (hi|action|object_action|full)");
}

std::string prompt_variant_to_string(PromptVariant v) {
    switch (v) {
        case PromptVariant::Hi: return "hi";
        case PromptVariant::Action: return "action";
        case PromptVariant::ObjectAction: return "object_action";
        case PromptVariant::Full: return "full";
    }
    return "full";
}

std::string build_prompt(const std::string& object_name, const std::string& action_name,
                         PromptVariant variant) {
    const bool needs_action = variant != PromptVariant::Hi;
    const bool needs_object =
        variant == PromptVariant::ObjectAction || variant == PromptVariant::Full;
    if (needs_action && action_name.empty())
        throw std::invalid_argument("build_prompt: action name required for this variant");
    if (needs_object && object_name.empty())
        throw std::invalid_argument("build_prompt: object name required for this variant");

    switch (variant) {
        case PromptVariant::Hi:
            return "Hi";
        case PromptVariant::Action:
            return action_name;
        case PromptVariant::ObjectAction:
            return action_name + ", " + object_name;
        case PromptVariant::Full:
            return "What part of the " + object_name +
                   " should we interact with in order to " + action_name + " it?";
    }
    throw std::logic_error("unreachable");
}

std::string target_answer_template() {
    return "You should interact with the <mask_token> region.";
}

}  // namespace afford::data
