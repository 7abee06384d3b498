#pragma once

// Data files compiled into the library (see data/).

#include <string_view>

namespace apprentice::resources {

std::string_view default_layout();
std::string_view prompts();
std::string_view mock_rules();
std::string_view refusal_config();
std::string_view onion_soup_script();

}  // namespace apprentice::resources
