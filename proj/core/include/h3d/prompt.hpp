#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "h3d/catalog.hpp"

namespace h3d {

// Architectural attributes encoded into a generation prompt.
struct AttributeSet {
  std::string site_name;
  std::string structural_type;
  std::string primary_material;
  std::vector<std::string> scale_elements;
  std::vector<std::string> decorative_features;
  std::string illumination;

  friend bool operator==(const AttributeSet&, const AttributeSet&) = default;
};

AttributeSet attributes_of(const SiteRecord& site);

// Canonical serialization hashed into PromptText::attr_digest.
std::string canonical_attributes(const AttributeSet& attrs);

// Placeholder field names a template may reference: the AttributeSet fields
// plus `features_joined` (scale elements followed by decorative features).
inline constexpr std::string_view kPromptFields[] = {
    "site_name",       "structural_type",     "primary_material", "scale_elements",
    "decorative_features", "illumination",    "features_joined",
};

bool is_prompt_field(std::string_view name) noexcept;

struct Literal {
  std::string text;  // unescaped
  friend bool operator==(const Literal&, const Literal&) = default;
};

struct Placeholder {
  std::string field;
  bool required = false;
  friend bool operator==(const Placeholder&, const Placeholder&) = default;
};

using TemplateToken = std::variant<Literal, Placeholder>;

struct PromptTemplate {
  std::string id;
  std::string source_text;
  std::vector<TemplateToken> tokens;
};

struct PromptText {
  std::string text;
  std::string template_id;
  std::string attr_digest;

  friend bool operator==(const PromptText&, const PromptText&) = default;
};

// Grammar: `{name}` optional placeholder, `{name!}` required placeholder,
// `{{` and `}}` literal braces. Anything else is literal text. Errors carry
// ErrorCode::kTemplateSyntax or kUnknownField with the byte offset.
PromptTemplate parse_template(std::string_view source, std::string id = "inline");

// Inverse of parse_template on the token list.
std::string serialize_template(const std::vector<TemplateToken>& tokens);

PromptText compile_prompt(const PromptTemplate& tmpl, const AttributeSet& attrs);

enum class LintKind { kMissingRequired, kEmptyOptional, kUnused };

struct LintIssue {
  LintKind kind;
  std::string field;
  friend bool operator==(const LintIssue&, const LintIssue&) = default;
};

std::string_view lint_kind_name(LintKind k) noexcept;

std::vector<LintIssue> lint_attributes(const AttributeSet& attrs, const PromptTemplate& tmpl);

inline constexpr std::string_view kDefaultTemplateId = "default";
std::string_view default_template_source();
PromptTemplate default_template();

// Templates live as UTF-8 files at <dir>/<id>.prompt. The default template is
// always available even when no file exists for it.
class TemplateLibrary {
 public:
  explicit TemplateLibrary(std::filesystem::path dir);

  PromptTemplate load(const std::string& id) const;
  bool exists(const std::string& id) const;
  void save(const std::string& id, std::string_view source) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace h3d
