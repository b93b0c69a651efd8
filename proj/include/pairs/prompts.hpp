#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace pairs {

/// The three prompt shapes used by the pipeline. Placeholders are literal
/// {q} and {context}; every occurrence is substituted.
struct PromptTemplates {
    std::string pseudo_context;  // needs {q}
    std::string direct_answer;   // needs {q}
    std::string context_answer;  // needs {q} and {context}

    bool operator==(const PromptTemplates&) const = default;
};

/// Built-in wording. The same texts ship as editable files under templates/.
PromptTemplates default_templates();

/// Reads pseudo_context.txt, direct_answer.txt, context_answer.txt from a
/// directory. Missing file -> FormatError; missing placeholder is reported
/// later, at render time.
PromptTemplates load_templates(const std::filesystem::path& dir);

/// Substitutes {q}. Throws ConfigError if the template lacks the
/// placeholder, InvalidInputError if the question is empty.
std::string render_question_prompt(std::string_view tmpl, std::string_view question);

/// Substitutes {q} and {context}; both placeholders must be present and the
/// context must be non-empty.
std::string render_context_prompt(std::string_view tmpl, std::string_view question,
                                  std::string_view context);

}  // namespace pairs
