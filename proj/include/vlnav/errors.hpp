#pragma once

#include <stdexcept>
#include <string>

namespace vlnav {

// Malformed input file (scene, corpus, config, grammar). The message carries
// the file/line context supplied by the thrower.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a documented invariant.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace vlnav
