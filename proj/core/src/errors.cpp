#include "emcloud/errors.hpp"

namespace emcloud {

MalformedProcess::MalformedProcess(std::vector<std::string> violations)
    : Error("MalformedProcess",
            [&] {
              std::string msg = "malformed process definition:";
              for (const auto& v : violations) msg += "\n  - " + v;
              return msg;
            }()),
      violations_(std::move(violations)) {}

}  // namespace emcloud
