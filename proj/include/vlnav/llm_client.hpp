#pragma once

#include <string>

#include "vlnav/instruction_parser.hpp"

namespace vlnav {

// Wire contract for the optional external parser. The client POSTs
// `{"prompt": <rendered template>}` to http://host:port/path and expects
// `{"completion": <text>}` back, where the completion is a JSON array of
// macro-action records. Disabled by default; the grammar path needs no
// endpoint.
struct LlmEndpoint {
    std::string host;
    int port{0};
    std::string path{"/v1/complete"};
    int timeout_seconds{10};

    bool configured() const { return !host.empty() && port > 0; }
};

// Substitutes every "{{INSTRUCTION}}" in the template.
std::string render_prompt(const std::string& prompt_template,
                          const std::string& instruction);

// Sends the rendered prompt, parses the completion into a MacroProgram and
// validates it. Throws: std::runtime_error on endpoint failure, ParseError
// on a malformed reply, ValidationError listing program violations.
MacroProgram llm_parse(const std::string& instruction,
                       const std::string& prompt_template_path,
                       const LlmEndpoint& endpoint);

}  // namespace vlnav
