#pragma once

#include <stdexcept>
#include <string>

namespace ccplan {

// Error categories map 1:1 onto CLI exit codes (see tools/ccplan.cpp):
// validation 2, infeasible 3, degenerate model 4.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct decode_error : validation_error {
    using validation_error::validation_error;
};

struct parse_error : validation_error {
    using validation_error::validation_error;
};

struct infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct degenerate_model_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ccplan
