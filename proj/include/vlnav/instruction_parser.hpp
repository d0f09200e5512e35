#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace vlnav {

// The fixed macro-action inventory. Landmark variants carry noun phrases the
// localizer grounds on the map; pure motions carry optional magnitudes.
enum class MacroName : int {
    kMoveForward,
    kTurnLeft,
    kTurnRight,
    kMoveTo,
    kMoveToLeft,
    kMoveToRight,
    kMoveToFront,
    kMoveInBetween,
    kFace,
    kStop,
};

const char* to_string(MacroName name);
MacroName macro_name_from_string(const std::string& s);

struct MacroAction {
    MacroName name{MacroName::kStop};
    std::optional<double> dist;   // meters, move_forward only
    std::optional<double> angle;  // degrees, turns only
    std::string landmark;         // landmark actions
    std::string landmark2;        // move_in_between only

    bool operator==(const MacroAction&) const = default;
};

using MacroProgram = std::vector<MacroAction>;

// Program-invariant violations reported as data, one per offense.
struct Violation {
    std::string code;  // e.g. "StopNotLast", "EmptyLandmark"
    int index{-1};     // offending action, -1 for whole-program issues
    std::string detail;
};

std::vector<Violation> validate_program(const MacroProgram& prog);

// Raised for the first clause no grammar template matches; parsing never
// silently skips a clause.
struct UnparsableClause : std::runtime_error {
    explicit UnparsableClause(std::string clause_text)
        : std::runtime_error("no template matches clause: \"" + clause_text +
                             "\""),
          clause(std::move(clause_text)) {}
    std::string clause;
};

// Deterministic grammar over a controlled English subset. Template rules and
// the synonym table live in a grammar file so the vocabulary can grow
// without rebuilds:
//
//   syn GO = go | walk | navigate | move
//   rule GO to [the] left [side] of {NP} [ahead] -> move_to_left(landmark)
//
// Pattern tokens: lowercase literals, UPPERCASE synonym-class references,
// {NUM} numbers, {UNIT} length/angle units, {NP} noun phrases (articles
// stripped); [tok] marks a token optional.
class Grammar {
public:
    static Grammar load(const std::string& path);
    static Grammar parse_definition(const std::string& text,
                                    const std::string& origin);

    // Splits on sentence boundaries and the connectives and/then, matches
    // each clause to one macro-action. Throws UnparsableClause on the first
    // unmatched clause, ValidationError when text holds no clause at all.
    MacroProgram parse_instruction(const std::string& text) const;

    // Exposed for tests: normalized clause texts in instruction order.
    std::vector<std::string> split_clauses(const std::string& text) const;

private:
    enum class TokKind { kLiteral, kSynonym, kNum, kUnit, kNounPhrase };
    struct PatternToken {
        TokKind kind{TokKind::kLiteral};
        std::string value;
        bool optional{false};
    };
    enum class Binding { kDist, kAngle, kLandmark, kLandmark2 };
    struct FixedParam {
        Binding target;
        double value;
    };
    struct Rule {
        std::vector<PatternToken> pattern;
        MacroName macro{MacroName::kStop};
        std::vector<Binding> bindings;  // capture order
        std::vector<FixedParam> fixed;
        std::string source;
    };

    bool is_clause_start(const std::string& token) const;
    std::optional<MacroAction> match_rule(
        const Rule& rule, const std::vector<std::string>& tokens) const;

    std::map<std::string, std::set<std::string>> synonyms_;
    std::vector<Rule> rules_;
    std::set<std::string> start_tokens_;
};

nlohmann::json macro_to_json(const MacroAction& action);
MacroAction macro_from_json(const nlohmann::json& j);
nlohmann::json program_to_json(const MacroProgram& prog);
MacroProgram program_from_json(const nlohmann::json& j);

}  // namespace vlnav
