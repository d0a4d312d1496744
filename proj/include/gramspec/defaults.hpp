#pragma once

#include <string>
#include <vector>

#include "gramspec/io.hpp"

namespace gramspec {

struct DefaultEntry {
  std::string name;
  Json value;
  std::string description;
};

/// Every tunable with its default, read off default-constructed option structs.
const std::vector<DefaultEntry>& defaults_table();

Json defaults_json();

/// Markdown table of defaults_table().
std::string defaults_markdown();

}  // namespace gramspec
