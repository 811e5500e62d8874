#include "inval/prompts.hpp"

#include <array>

#include "inval/errors.hpp"
#include "inval/util.hpp"

namespace inval {

// Generated from templates/*.txt by CMake.
namespace generated {
struct TemplateText {
    const char* name;
    const char* system;
    const char* user;
};
extern const std::array<TemplateText, 8> kTemplates;
}  // namespace generated

namespace {

constexpr std::array<std::string_view, 8> kNames = {
    "further_question_en",  "further_question_zh", "yesno_answer_en",      "yesno_answer_zh",
    "dialogue_summary_en",  "dialogue_summary_zh", "subtitle_describe_en", "subtitle_describe_zh",
};

bool placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Length of the "{name}" token starting at body[i], or 0.
std::size_t placeholder_at(std::string_view body, std::size_t i) {
    if (body[i] != '{') return 0;
    std::size_t j = i + 1;
    while (j < body.size() && placeholder_char(body[j])) ++j;
    if (j == i + 1 || j >= body.size() || body[j] != '}') return 0;
    return j - i + 1;
}

}  // namespace

std::string_view to_string(TemplateName n) { return kNames[static_cast<std::size_t>(n)]; }

const PromptTemplate& builtin_template(TemplateName name) {
    static const auto table = [] {
        std::array<PromptTemplate, 8> t;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto& g = generated::kTemplates[i];
            if (kNames[i] != g.name) throw Error("template table out of order");
            t[i] = {static_cast<TemplateName>(i), g.system, g.user};
        }
        return t;
    }();
    return table[static_cast<std::size_t>(name)];
}

PromptTemplate load_template(const std::filesystem::path& dir, TemplateName name) {
    auto base = std::string(to_string(name));
    return {name, read_file(dir / (base + ".system.txt")), read_file(dir / (base + ".user.txt"))};
}

TemplateName template_for(PromptKind kind, Language lang) {
    return static_cast<TemplateName>(static_cast<int>(kind) * 2 + (lang == Language::zh ? 1 : 0));
}

std::vector<std::string> placeholders(std::string_view body) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (auto n = placeholder_at(body, i)) {
            out.emplace_back(body.substr(i + 1, n - 2));
            i += n - 1;
        }
    }
    return out;
}

ChatRequest render_prompt(const PromptTemplate& tpl, const Bindings& bindings) {
    std::string_view body = tpl.user_body;
    std::string out;
    out.reserve(body.size() * 2);
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (auto n = placeholder_at(body, i)) {
            auto key = body.substr(i + 1, n - 2);
            auto it = bindings.find(key);
            if (it == bindings.end()) throw RenderError(std::string(key));
            out += it->second;
            i += n - 1;
        } else {
            out += body[i];
        }
    }
    ChatRequest req;
    req.system = tpl.system;
    req.user = std::move(out);
    return req;
}

std::string format_dialogue(const Dialogue& d) {
    std::string out;
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
        if (i) out += '\n';
        out += "Q: " + d.turns[i].question + "\nA: " + std::string(to_string(d.turns[i].answer));
    }
    return out;
}

}  // namespace inval
