#include <doctest.h>

#include "inval/errors.hpp"
#include "inval/interact.hpp"
#include "inval/prompts.hpp"
#include "inval/providers/cache.hpp"
#include "inval/subtitles.hpp"
#include "inval/util.hpp"
#include "support/support.hpp"

using namespace inval;

namespace {

const std::vector<TemplateName> kAllTemplates = {
    TemplateName::further_question_en, TemplateName::further_question_zh, TemplateName::yesno_answer_en,
    TemplateName::yesno_answer_zh,     TemplateName::dialogue_summary_en, TemplateName::dialogue_summary_zh,
    TemplateName::subtitle_describe_en, TemplateName::subtitle_describe_zh,
};

std::vector<VideoSegment> two_segments() {
    return align_segments({{1, 0, 2, "wrap the band"}, {2, 2, 4, "tighten it"}}, "v");
}

std::string golden(const std::string& name) {
    return read_file(test::source_dir() / "tests" / "golden" / (name + ".user.golden"));
}

}  // namespace

TEST_CASE("render_prompt: further question carries the initial question") {
    auto req = render_prompt(builtin_template(TemplateName::further_question_en),
                             {{"init_question", "How to X?"}, {"hist_dialogue", ""}, {"description_spans", ""}});
    CHECK(req.user.find("INITIAL_QUESTION: How to X?") != std::string::npos);
    CHECK(req.system == builtin_template(TemplateName::further_question_en).system);
    CHECK(req.temperature == 0.0);
}

TEST_CASE("render_prompt: dialogue summary ends with the intent question") {
    auto req = render_prompt(builtin_template(TemplateName::dialogue_summary_en), {{"question", "Q"}, {"dialogue", "D"}});
    CHECK(req.user.ends_with("what the user really want to ask?"));
}

TEST_CASE("render_prompt: missing binding names the placeholder") {
    try {
        render_prompt(builtin_template(TemplateName::further_question_en),
                      {{"init_question", "Q"}, {"description_spans", "S"}});
        FAIL("expected RenderError");
    } catch (const RenderError& e) {
        CHECK(e.placeholder() == "hist_dialogue");
    }
}

TEST_CASE("render_prompt: bound values are not rescanned") {
    PromptTemplate t{TemplateName::yesno_answer_en, "sys", "A={a} B={b}"};
    auto req = render_prompt(t, {{"a", "{b}"}, {"b", "x"}});
    CHECK(req.user == "A={b} B=x");
    CHECK(placeholders("{a} text {b_c} {a} {NotOne}") == std::vector<std::string>{"a", "b_c", "a"});
}

TEST_CASE("templates on disk match the compiled-in copies") {
    for (auto name : kAllTemplates) {
        INFO(to_string(name));
        auto disk = load_template(test::source_dir() / "templates", name);
        CHECK(disk.system == builtin_template(name).system);
        CHECK(disk.user_body == builtin_template(name).user_body);
        CHECK_FALSE(builtin_template(name).user_body.empty());
    }
    CHECK(template_for(PromptKind::further_question, Language::zh) == TemplateName::further_question_zh);
    CHECK(template_for(PromptKind::subtitle_describe, Language::en) == TemplateName::subtitle_describe_en);
}

TEST_CASE("interactor requests byte-match the golden files") {
    ScriptedChat chat({"Do you mean on the arm?", "yes", "Do you mean the thigh?", "no", "How to apply it on the arm",
                       "tightening the band"});
    Interactor it(chat, {});
    auto segs = two_segments();

    ChatSession session;
    session.dialogue.initial_question = "How do I apply a tourniquet?";
    session.subtitles_blob = subtitles_blob(segs);
    session.record("Do you mean on the arm?", Answer::yes);
    it.ask_further_question(session);
    CHECK(chat.requests().back().user == golden("further_question_en"));

    it.answer_question("Do you mean on the arm?", session);
    CHECK(chat.requests().back().user == golden("yesno_answer_en"));

    Dialogue d{"How do I apply a tourniquet?", {{"Do you mean on the arm?", Answer::yes}}};
    it.rewrite_question(d);
    CHECK(chat.requests().back().user == golden("dialogue_summary_en"));

    it.rewrite_subtitle(segs[1], subtitles_blob(segs));
    CHECK(chat.requests().back().user == golden("subtitle_describe_en"));
}

TEST_CASE("ask_further_question") {
    ScriptedChat chat({"Do you mean the left arm?"});
    Interactor it(chat, {});
    ChatSession s;
    s.dialogue.initial_question = "Q";
    s.subtitles_blob = "[0] a";
    s.record("Do you mean A?", Answer::yes);
    s.record("Do you mean B?", Answer::no);
    CHECK(s.round == 2);
    CHECK(it.ask_further_question(s) == "Do you mean the left arm?");
    CHECK(s.dialogue.turns.size() == 2);
    CHECK(chat.requests()[0].user.find("Q: Do you mean A?\nA: yes\nQ: Do you mean B?\nA: no") != std::string::npos);

    s.record("Do you mean C?", Answer::yes);
    CHECK_THROWS_AS(it.ask_further_question(s), PreconditionError);

    ScriptedChat empty({""});
    Interactor it2(empty, {});
    ChatSession fresh;
    fresh.dialogue.initial_question = "Q";
    fresh.subtitles_blob = "[0] a";
    CHECK_THROWS_AS(it2.ask_further_question(fresh), ProviderError);
}

TEST_CASE("answer normalization") {
    CHECK(parse_yes_no("Yes.") == Answer::yes);
    CHECK(parse_yes_no("no, that is not it") == Answer::no);
    CHECK(parse_yes_no("  \"YES\"") == Answer::yes);
    CHECK(parse_yes_no("是的") == Answer::yes);
    CHECK(parse_yes_no("否") == Answer::no);
    CHECK_FALSE(parse_yes_no("maybe"));
    CHECK_FALSE(parse_yes_no("yesterday"));
    CHECK_FALSE(parse_yes_no(""));

    ChatSession s;
    s.dialogue.initial_question = "Q";
    s.subtitles_blob = "[0] a";
    ScriptedChat once({"maybe", "No."});
    CHECK(Interactor(once, {}).answer_question("Do you mean X?", s) == Answer::no);
    CHECK(once.calls() == 2);

    ScriptedChat twice({"maybe", "maybe"});
    CHECK_THROWS_AS(Interactor(twice, {}).answer_question("Do you mean X?", s), AnswerError);
}

TEST_CASE("run_chat") {
    auto segs = two_segments();
    SUBCASE("three rounds in script order") {
        ScriptedChat chat({"Do you mean 1?", "yes", "Do you mean 2?", "no", "Do you mean 3?", "yes"});
        auto d = Interactor(chat, {}).run_chat("Q", segs);
        REQUIRE(d.turns.size() == 3);
        CHECK(d.initial_question == "Q");
        CHECK(d.turns[0] == DialogueTurn{"Do you mean 1?", Answer::yes});
        CHECK(d.turns[1] == DialogueTurn{"Do you mean 2?", Answer::no});
        CHECK(d.turns[2] == DialogueTurn{"Do you mean 3?", Answer::yes});
    }
    SUBCASE("one round") {
        ScriptedChat chat({"Do you mean 1?", "no"});
        InteractOptions o;
        o.rounds = 1;
        CHECK(Interactor(chat, o).run_chat("Q", segs).turns.size() == 1);
    }
    SUBCASE("chatting off makes no calls") {
        ScriptedChat chat;
        InteractOptions o;
        o.toggles.chatting = false;
        auto d = Interactor(chat, o).run_chat("Q", segs);
        CHECK(d.turns.empty());
        CHECK(chat.calls() == 0);
    }
    SUBCASE("failure carries the round") {
        ScriptedChat chat({"Do you mean 1?", "yes", "Do you mean 2?", "perhaps", "unclear"});
        try {
            Interactor(chat, {}).run_chat("Q", segs);
            FAIL("expected RoundError");
        } catch (const RoundError& e) {
            CHECK(e.round() == 2);
            CHECK(e.stage() == "chat");
        }
    }
    SUBCASE("description spans override the questioner context") {
        ScriptedChat chat({"Do you mean 1?", "yes"});
        InteractOptions o;
        o.rounds = 1;
        Interactor(chat, o).run_chat("Q", segs, std::string("[1] tighten it"));
        CHECK(chat.requests()[0].user.find("DESCRIPTION_SPANS: [1] tighten it") != std::string::npos);
        // The answerer still sees every subtitle.
        CHECK(chat.requests()[1].user.find("[0] wrap the band [1] tighten it") != std::string::npos);
    }
}

TEST_CASE("rewriting") {
    Dialogue d{"How do I apply a tourniquet?", {{"Do you mean on the arm?", Answer::yes}, {"Do you mean tightly?", Answer::no}}};
    SUBCASE("provider output is Q' verbatim and the prompt holds every turn") {
        ScriptedChat chat({"Apply a tourniquet on the arm"});
        CHECK(Interactor(chat, {}).rewrite_question(d) == "Apply a tourniquet on the arm");
        const auto& user = chat.requests()[0].user;
        CHECK(user.find("Do you mean on the arm?") != std::string::npos);
        CHECK(user.find("Do you mean tightly?") != std::string::npos);
    }
    SUBCASE("rewriting off returns the raw texts without calls") {
        ScriptedChat chat;
        InteractOptions o;
        o.toggles.rewriting = false;
        Interactor it(chat, o);
        CHECK(it.rewrite_question(d) == d.initial_question);
        auto segs = two_segments();
        CHECK(it.rewrite_subtitle(segs[0], "blob") == "wrap the band");
        it.rewrite_subtitles(segs);
        CHECK_FALSE(segs[1].description);
        CHECK(segs[1].text() == "tighten it");
        CHECK(chat.calls() == 0);
    }
    SUBCASE("description stored per segment") {
        ScriptedChat chat({"The nurse sanitizes hands."});
        auto segs = align_segments({{1, 0, 1, "wash up"}}, "v");
        Interactor(chat, {}).rewrite_subtitles(segs);
        CHECK(segs[0].description == std::optional<std::string>("The nurse sanitizes hands."));
    }
    SUBCASE("12 segments: 12 calls cold, 0 warm") {
        std::vector<SubtitleCue> cues;
        for (int i = 0; i < 12; ++i) cues.push_back({i + 1, i * 2.0, i * 2.0 + 2, "line " + std::to_string(i)});
        auto inner = std::make_shared<RuleBasedChat>();
        auto cache = std::make_shared<ResponseCache>();
        CachedChat chat(inner, cache);
        auto segs = align_segments(cues, "v");
        Interactor it(chat, {});
        it.rewrite_subtitles(segs);
        CHECK(inner->calls() == 12);
        for (const auto& s : segs) CHECK(s.description.has_value());
        auto again = align_segments(cues, "v");
        CachedChat warm(inner, cache);
        Interactor(warm, {}).rewrite_subtitles(again);
        CHECK(inner->calls() == 12);
        CHECK(again == segs);
    }
}

TEST_CASE("rule-based mock follows the template roles") {
    RuleBasedChat chat;
    Interactor it(chat, {});
    auto segs = two_segments();
    auto d = it.run_chat("How do I apply a tourniquet?", segs);
    REQUIRE(d.turns.size() == 3);
    for (const auto& t : d.turns) CHECK(t.question.starts_with("Do you mean"));
    CHECK(it.rewrite_question(d) == "How do I apply a tourniquet?");
    CHECK(it.rewrite_subtitle(segs[1], subtitles_blob(segs)) == "tighten it");
}
