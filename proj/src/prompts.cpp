#include "pairs/prompts.hpp"

#include <array>
#include <fstream>
#include <span>
#include <sstream>
#include <utility>

#include "pairs/errors.hpp"

namespace pairs {

namespace {

using Field = std::pair<std::string_view, std::string_view>;  // placeholder, value

// Single pass over the template: substituted values are never rescanned, so
// a question or passage containing a literal "{q}" cannot be re-expanded.
// Every placeholder must occur at least once.
std::string substitute(std::string_view tmpl, std::span<const Field> fields) {
    for (const auto& [placeholder, value] : fields) {
        if (tmpl.find(placeholder) == std::string_view::npos) {
            throw ConfigError("prompt template is missing the " + std::string(placeholder) +
                              " placeholder");
        }
    }
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t hit = std::string_view::npos;
        const Field* matched = nullptr;
        for (const auto& field : fields) {
            const std::size_t at = tmpl.find(field.first, pos);
            if (at < hit) {
                hit = at;
                matched = &field;
            }
        }
        if (matched == nullptr) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, hit - pos));
        out.append(matched->second);
        pos = hit + matched->first.size();
    }
    return out;
}

std::string read_template_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open prompt template '" + path.string() + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return std::move(buffer).str();
}

}  // namespace

PromptTemplates default_templates() {
    PromptTemplates t;
    t.pseudo_context =
        "Write a short encyclopedia-style passage that would contain the answer to the "
        "question.\nQuestion: {q}\nPassage:";
    t.direct_answer =
        "Answer from memory with a short factual phrase.\nQuestion: {q}\nAnswer:";
    t.context_answer =
        "Use the passages to answer with a short factual phrase.\nPassages:\n{context}\n\n"
        "Question: {q}\nAnswer:";
    return t;
}

PromptTemplates load_templates(const std::filesystem::path& dir) {
    PromptTemplates t;
    t.pseudo_context = read_template_file(dir / "pseudo_context.txt");
    t.direct_answer = read_template_file(dir / "direct_answer.txt");
    t.context_answer = read_template_file(dir / "context_answer.txt");
    return t;
}

std::string render_question_prompt(std::string_view tmpl, std::string_view question) {
    if (question.empty()) {
        throw InvalidInputError("question must be non-empty");
    }
    const std::array<Field, 1> fields{{{"{q}", question}}};
    return substitute(tmpl, fields);
}

std::string render_context_prompt(std::string_view tmpl, std::string_view question,
                                  std::string_view context) {
    if (question.empty()) {
        throw InvalidInputError("question must be non-empty");
    }
    if (context.empty()) {
        throw InvalidInputError("context must be non-empty");
    }
    const std::array<Field, 2> fields{{{"{q}", question}, {"{context}", context}}};
    return substitute(tmpl, fields);
}

}  // namespace pairs
