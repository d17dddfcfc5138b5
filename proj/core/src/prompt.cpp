#include "h3d/prompt.hpp"

#include <algorithm>
#include <fstream>

#include "h3d/error.hpp"
#include "h3d/json_io.hpp"

namespace h3d {
namespace {

constexpr std::string_view kDefaultTemplate =
    "High-fidelity photorealistic 3D render of a single architectural structure based on the "
    "reference images: {site_name!}, a {structural_type!} of {primary_material!}, featuring "
    "{decorative_features}. Use a 45° top-down isometric camera angle to reveal the "
    "building’s massing and roof geometry. Preserve accurate materials such as aged stone, "
    "marble, brick, wood, or metal with realistic texture mapping and natural wear. Emphasize fine "
    "details like carvings, arches, and windows. Use physically based lighting and global "
    "illumination to create realistic reflections and depth. Present the model isolated on a "
    "clean, neutral background for clarity.";

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

std::string field_value(const AttributeSet& a, std::string_view field) {
  if (field == "site_name") return a.site_name;
  if (field == "structural_type") return a.structural_type;
  if (field == "primary_material") return a.primary_material;
  if (field == "scale_elements") return join(a.scale_elements);
  if (field == "decorative_features") return join(a.decorative_features);
  if (field == "illumination") return a.illumination;
  if (field == "features_joined") {
    auto all = a.scale_elements;
    all.insert(all.end(), a.decorative_features.begin(), a.decorative_features.end());
    return join(all);
  }
  throw Error(ErrorCode::kUnknownField, "unknown attribute field '" + std::string(field) + "'");
}

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

[[noreturn]] void syntax_error(const std::string& what, std::size_t offset) {
  throw Error(ErrorCode::kTemplateSyntax, what + " at byte " + std::to_string(offset));
}

}  // namespace

bool is_prompt_field(std::string_view name) noexcept {
  return std::find(std::begin(kPromptFields), std::end(kPromptFields), name) != std::end(kPromptFields);
}

AttributeSet attributes_of(const SiteRecord& site) {
  return {site.name, site.site_type, site.material, site.scale_elements, site.features, site.illumination};
}

std::string canonical_attributes(const AttributeSet& attrs) { return to_json(attrs).dump(); }

PromptTemplate parse_template(std::string_view src, std::string id) {
  PromptTemplate out{std::move(id), std::string(src), {}};
  std::string literal;
  auto flush = [&] {
    if (!literal.empty()) out.tokens.emplace_back(Literal{std::move(literal)});
    literal.clear();
  };

  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (c == '{') {
      if (i + 1 < src.size() && src[i + 1] == '{') {
        literal.push_back('{');
        i += 2;
        continue;
      }
      std::size_t start = i;
      std::size_t j = i + 1;
      while (j < src.size() && is_name_char(src[j])) ++j;
      std::string name(src.substr(i + 1, j - i - 1));
      bool required = false;
      if (j < src.size() && src[j] == '!') {
        required = true;
        ++j;
      }
      if (j >= src.size()) syntax_error("unterminated placeholder", start);
      if (src[j] != '}') {
        if (src[j] == '{' || src[j] == '\n') syntax_error("unterminated placeholder", start);
        syntax_error("invalid character in placeholder name", j);
      }
      if (name.empty()) syntax_error("empty placeholder name", start);
      if (!is_prompt_field(name)) {
        throw Error(ErrorCode::kUnknownField,
                    "unknown field '" + name + "' at byte " + std::to_string(start));
      }
      flush();
      out.tokens.emplace_back(Placeholder{std::move(name), required});
      i = j + 1;
    } else if (c == '}') {
      if (i + 1 < src.size() && src[i + 1] == '}') {
        literal.push_back('}');
        i += 2;
        continue;
      }
      syntax_error("unmatched '}'", i);
    } else {
      literal.push_back(c);
      ++i;
    }
  }
  flush();
  return out;
}

std::string serialize_template(const std::vector<TemplateToken>& tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    if (const auto* lit = std::get_if<Literal>(&tok)) {
      for (char c : lit->text) {
        out.push_back(c);
        if (c == '{' || c == '}') out.push_back(c);
      }
    } else {
      const auto& ph = std::get<Placeholder>(tok);
      out += "{" + ph.field + (ph.required ? "!}" : "}");
    }
  }
  return out;
}

PromptText compile_prompt(const PromptTemplate& tmpl, const AttributeSet& attrs) {
  std::string text;
  for (const auto& tok : tmpl.tokens) {
    if (const auto* lit = std::get_if<Literal>(&tok)) {
      text += lit->text;
      continue;
    }
    const auto& ph = std::get<Placeholder>(tok);
    if (!is_prompt_field(ph.field)) {
      throw Error(ErrorCode::kUnknownField,
                  "template '" + tmpl.id + "' references unknown field '" + ph.field + "'");
    }
    auto value = field_value(attrs, ph.field);
    if (ph.required && value.empty()) {
      throw Error(ErrorCode::kMissingRequiredAttribute,
                  "required attribute '" + ph.field + "' is empty");
    }
    text += value;
  }
  return {std::move(text), tmpl.id, sha256_hex(canonical_attributes(attrs))};
}

std::string_view lint_kind_name(LintKind k) noexcept {
  switch (k) {
    case LintKind::kMissingRequired: return "missing_required";
    case LintKind::kEmptyOptional: return "empty_optional";
    case LintKind::kUnused: return "unused";
  }
  return "unused";
}

std::vector<LintIssue> lint_attributes(const AttributeSet& attrs, const PromptTemplate& tmpl) {
  std::vector<LintIssue> issues;
  std::vector<std::string> referenced;
  auto add = [&](LintIssue issue) {
    if (std::find(issues.begin(), issues.end(), issue) == issues.end()) issues.push_back(std::move(issue));
  };
  for (const auto& tok : tmpl.tokens) {
    const auto* ph = std::get_if<Placeholder>(&tok);
    if (!ph) continue;
    if (ph->field == "features_joined") {
      referenced.push_back("scale_elements");
      referenced.push_back("decorative_features");
    } else {
      referenced.push_back(ph->field);
    }
    if (!is_prompt_field(ph->field)) continue;
    if (field_value(attrs, ph->field).empty()) {
      add({ph->required ? LintKind::kMissingRequired : LintKind::kEmptyOptional, ph->field});
    }
  }
  for (std::string_view field : kPromptFields) {
    if (field == "features_joined") continue;
    bool used = std::find(referenced.begin(), referenced.end(), field) != referenced.end();
    if (!used && !field_value(attrs, field).empty()) add({LintKind::kUnused, std::string(field)});
  }
  return issues;
}

std::string_view default_template_source() { return kDefaultTemplate; }

PromptTemplate default_template() {
  return parse_template(kDefaultTemplate, std::string(kDefaultTemplateId));
}

TemplateLibrary::TemplateLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

namespace {
bool valid_template_id(const std::string& id) {
  return !id.empty() && id.size() <= 128 &&
         std::all_of(id.begin(), id.end(), [](char c) { return is_name_char(c) || c == '-'; });
}
}  // namespace

bool TemplateLibrary::exists(const std::string& id) const {
  if (!valid_template_id(id)) return false;
  return id == kDefaultTemplateId || std::filesystem::exists(dir_ / (id + ".prompt"));
}

PromptTemplate TemplateLibrary::load(const std::string& id) const {
  if (!valid_template_id(id)) throw Error(ErrorCode::kTemplateNotFound, "invalid template id '" + id + "'");
  auto path = dir_ / (id + ".prompt");
  if (std::filesystem::exists(path)) {
    auto bytes = read_file(path);
    return parse_template(to_string(bytes), id);
  }
  if (id == kDefaultTemplateId) return default_template();
  throw Error(ErrorCode::kTemplateNotFound, "template '" + id + "' not found");
}

void TemplateLibrary::save(const std::string& id, std::string_view source) const {
  if (!valid_template_id(id)) throw Error(ErrorCode::kInvalidArgument, "invalid template id '" + id + "'");
  parse_template(source, id);
  write_file_atomic(dir_ / (id + ".prompt"), source);
}

}  // namespace h3d
