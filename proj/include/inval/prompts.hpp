#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "inval/providers/chat.hpp"
#include "inval/types.hpp"

namespace inval {

enum class TemplateName {
    further_question_en,
    further_question_zh,
    yesno_answer_en,
    yesno_answer_zh,
    dialogue_summary_en,
    dialogue_summary_zh,
    subtitle_describe_en,
    subtitle_describe_zh,
};

std::string_view to_string(TemplateName n);

struct PromptTemplate {
    TemplateName name;
    std::string system;
    std::string user_body;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Template compiled into the binary from templates/<name>.{system,user}.txt.
const PromptTemplate& builtin_template(TemplateName name);
/// Same layout read from `dir` at run time.
PromptTemplate load_template(const std::filesystem::path& dir, TemplateName name);

enum class PromptKind { further_question, yesno_answer, dialogue_summary, subtitle_describe };
TemplateName template_for(PromptKind kind, Language lang);

/// Placeholder names ("{name}", lower-case letters and '_') in order of appearance.
std::vector<std::string> placeholders(std::string_view body);

/// Substitutes every placeholder in one pass (bound values are not rescanned).
/// Throws RenderError naming the first placeholder without a binding.
ChatRequest render_prompt(const PromptTemplate& tpl, const Bindings& bindings);

/// Dialogue turns as "Q: ...\nA: yes" lines.
std::string format_dialogue(const Dialogue& d);

}  // namespace inval
