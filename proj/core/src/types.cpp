#include "vcdet/types.hpp"

namespace vcdet {

std::string format_prompt(const std::string& templ, const std::string& name) {
  const auto pos = templ.find("{}");
  if (pos == std::string::npos) return templ + " " + name;
  return templ.substr(0, pos) + name + templ.substr(pos + 2);
}

std::string Vocabulary::prompt_for(const std::string& name) const {
  return format_prompt(prompt_template, name);
}

}  // namespace vcdet
