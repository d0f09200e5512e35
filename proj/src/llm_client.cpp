#include "vlnav/llm_client.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "vlnav/errors.hpp"

namespace vlnav {

std::string render_prompt(const std::string& prompt_template,
                          const std::string& instruction) {
    static const std::string kPlaceholder = "{{INSTRUCTION}}";
    std::string out = prompt_template;
    std::size_t pos = 0;
    while ((pos = out.find(kPlaceholder, pos)) != std::string::npos) {
        out.replace(pos, kPlaceholder.size(), instruction);
        pos += instruction.size();
    }
    return out;
}

MacroProgram llm_parse(const std::string& instruction,
                       const std::string& prompt_template_path,
                       const LlmEndpoint& endpoint) {
    if (!endpoint.configured()) {
        throw std::runtime_error("no LLM endpoint configured");
    }
    std::ifstream in(prompt_template_path);
    if (!in) {
        throw ParseError(prompt_template_path + ": cannot open prompt template");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string prompt = render_prompt(buf.str(), instruction);

    httplib::Client client(endpoint.host, endpoint.port);
    client.set_read_timeout(endpoint.timeout_seconds, 0);
    client.set_connection_timeout(endpoint.timeout_seconds, 0);

    nlohmann::json req;
    req["prompt"] = prompt;
    auto res = client.Post(endpoint.path, req.dump(), "application/json");
    if (!res) {
        throw std::runtime_error("LLM endpoint unreachable: " + endpoint.host +
                                 ":" + std::to_string(endpoint.port));
    }
    if (res->status != 200) {
        throw std::runtime_error("LLM endpoint returned status " +
                                 std::to_string(res->status));
    }

    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("LLM reply is not valid JSON: ") + e.what());
    }
    if (!reply.contains("completion") || !reply["completion"].is_string()) {
        throw ParseError("LLM reply is missing the \"completion\" field");
    }

    nlohmann::json completion;
    try {
        completion = nlohmann::json::parse(reply["completion"].get<std::string>());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("LLM completion is not valid JSON: ") +
                         e.what());
    }
    MacroProgram prog = program_from_json(completion);

    const auto violations = validate_program(prog);
    if (!violations.empty()) {
        std::string msg = "LLM program is invalid:";
        for (const Violation& v : violations) {
            msg += " [" + v.code + " @" + std::to_string(v.index) + " " +
                   v.detail + "]";
        }
        throw ValidationError(msg);
    }
    return prog;
}

}  // namespace vlnav
