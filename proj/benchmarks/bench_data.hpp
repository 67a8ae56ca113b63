#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pagpass::bench {

// Deterministic word+digits passwords; enough structure for the models to learn something.
std::vector<std::string> passwords(std::size_t count);

}  // namespace pagpass::bench
