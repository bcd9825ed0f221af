#include "roughdrive/errors.hpp"

#include <sstream>

namespace roughdrive {

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "invalid configuration:";
        for (const auto& v : violations) os << "\n  - " << v;
        return os.str();
      }()),
      violations_(std::move(violations)) {}

}  // namespace roughdrive
