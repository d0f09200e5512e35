#include "vlnav/instruction_parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "vlnav/errors.hpp"

namespace vlnav {
namespace {

using nlohmann::json;

struct Unit {
    bool is_angle{false};
    double factor{1.0};  // to meters (length) or degrees (angle)
};

std::optional<Unit> lookup_unit(const std::string& tok) {
    static const std::map<std::string, Unit> kUnits = {
        {"m", {false, 1.0}},          {"meter", {false, 1.0}},
        {"meters", {false, 1.0}},     {"metre", {false, 1.0}},
        {"metres", {false, 1.0}},     {"cm", {false, 0.01}},
        {"centimeter", {false, 0.01}},{"centimeters", {false, 0.01}},
        {"deg", {true, 1.0}},         {"degree", {true, 1.0}},
        {"degrees", {true, 1.0}},
    };
    auto it = kUnits.find(tok);
    if (it == kUnits.end()) return std::nullopt;
    return it->second;
}

std::optional<double> parse_number(const std::string& tok) {
    if (tok.empty()) return std::nullopt;
    double value = 0.0;
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

bool is_article(const std::string& tok) {
    return tok == "a" || tok == "an" || tok == "the";
}

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Lowercases, splits sentences on [.!?;] (a period between digits stays part
// of the number), and tokenizes each sentence stripping edge punctuation.
std::vector<std::vector<std::string>> tokenize_sentences(
    const std::string& text) {
    const std::string lower = to_lower(text);
    std::vector<std::string> sentences;
    std::string cur;
    for (std::size_t p = 0; p < lower.size(); ++p) {
        const char c = lower[p];
        const bool digit_dot =
            c == '.' && p > 0 && p + 1 < lower.size() &&
            std::isdigit(static_cast<unsigned char>(lower[p - 1])) &&
            std::isdigit(static_cast<unsigned char>(lower[p + 1]));
        if ((c == '.' || c == '!' || c == '?' || c == ';') && !digit_dot) {
            sentences.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    sentences.push_back(cur);

    std::vector<std::vector<std::string>> out;
    for (const std::string& s : sentences) {
        std::vector<std::string> toks;
        std::istringstream in(s);
        std::string t;
        while (in >> t) {
            auto keep = [](char c) {
                return std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                       c == '-' || c == '_';
            };
            std::size_t b = 0, e = t.size();
            while (b < e && !keep(t[b])) ++b;
            while (e > b && !keep(t[e - 1])) --e;
            if (e > b) toks.push_back(t.substr(b, e - b));
        }
        if (!toks.empty()) out.push_back(std::move(toks));
    }
    return out;
}

}  // namespace

const char* to_string(MacroName name) {
    switch (name) {
        case MacroName::kMoveForward: return "move_forward";
        case MacroName::kTurnLeft: return "turn_left";
        case MacroName::kTurnRight: return "turn_right";
        case MacroName::kMoveTo: return "move_to";
        case MacroName::kMoveToLeft: return "move_to_left";
        case MacroName::kMoveToRight: return "move_to_right";
        case MacroName::kMoveToFront: return "move_to_front";
        case MacroName::kMoveInBetween: return "move_in_between";
        case MacroName::kFace: return "face";
        case MacroName::kStop: return "stop";
    }
    return "?";
}

MacroName macro_name_from_string(const std::string& s) {
    static const std::map<std::string, MacroName> kNames = {
        {"move_forward", MacroName::kMoveForward},
        {"turn_left", MacroName::kTurnLeft},
        {"turn_right", MacroName::kTurnRight},
        {"move_to", MacroName::kMoveTo},
        {"move_to_left", MacroName::kMoveToLeft},
        {"move_to_right", MacroName::kMoveToRight},
        {"move_to_front", MacroName::kMoveToFront},
        {"move_in_between", MacroName::kMoveInBetween},
        {"face", MacroName::kFace},
        {"stop", MacroName::kStop},
    };
    auto it = kNames.find(s);
    if (it == kNames.end()) throw ValidationError("unknown macro name: " + s);
    return it->second;
}

std::vector<Violation> validate_program(const MacroProgram& prog) {
    std::vector<Violation> out;
    if (prog.empty()) {
        out.push_back({"EmptyProgram", -1, "program has no actions"});
        return out;
    }
    for (std::size_t k = 0; k < prog.size(); ++k) {
        const MacroAction& a = prog[k];
        const int idx = static_cast<int>(k);
        const bool is_landmark_action =
            a.name == MacroName::kMoveTo || a.name == MacroName::kMoveToLeft ||
            a.name == MacroName::kMoveToRight ||
            a.name == MacroName::kMoveToFront || a.name == MacroName::kFace;
        const bool is_between = a.name == MacroName::kMoveInBetween;
        const bool is_turn =
            a.name == MacroName::kTurnLeft || a.name == MacroName::kTurnRight;

        if (a.name == MacroName::kStop && k + 1 != prog.size()) {
            out.push_back({"StopNotLast", idx, "stop must be the final action"});
        }
        if (a.dist && a.name != MacroName::kMoveForward) {
            out.push_back({"UnexpectedParam", idx, "dist is move_forward only"});
        }
        if (a.angle && !is_turn) {
            out.push_back({"UnexpectedParam", idx, "angle is for turns only"});
        }
        if (!a.landmark.empty() && !is_landmark_action && !is_between) {
            out.push_back({"UnexpectedParam", idx,
                           std::string("landmark not applicable to ") +
                               to_string(a.name)});
        }
        if (!a.landmark2.empty() && !is_between) {
            out.push_back(
                {"UnexpectedParam", idx, "landmark2 is move_in_between only"});
        }
        if ((is_landmark_action || is_between) && a.landmark.empty()) {
            out.push_back({"EmptyLandmark", idx, "landmark is required"});
        }
        if (is_between && a.landmark2.empty()) {
            out.push_back({"EmptyLandmark", idx, "landmark2 is required"});
        }
        for (const std::string* lm : {&a.landmark, &a.landmark2}) {
            if (std::any_of(lm->begin(), lm->end(), [](unsigned char c) {
                    return std::isupper(c);
                })) {
                out.push_back({"LandmarkNotLowercase", idx, *lm});
            }
        }
        if (a.dist && !(*a.dist > 0.0)) {
            out.push_back({"NonPositiveDist", idx, "dist must be > 0"});
        }
        if (a.angle && !(*a.angle > 0.0 && *a.angle <= 180.0)) {
            out.push_back({"AngleOutOfRange", idx, "angle must be in (0, 180]"});
        }
    }
    return out;
}

Grammar Grammar::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open grammar file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_definition(buf.str(), path);
}

Grammar Grammar::parse_definition(const std::string& text,
                                  const std::string& origin) {
    Grammar g;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto ctx = origin + ":" + std::to_string(lineno);
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;

        if (head == "syn") {
            std::string name, eq, rest;
            ls >> name >> eq;
            if (eq != "=") throw ParseError(ctx + ": expected `syn NAME = ...`");
            std::getline(ls, rest);
            std::set<std::string> members;
            std::istringstream ms(rest);
            std::string word;
            std::string piece;
            while (std::getline(ms, piece, '|')) {
                std::istringstream ps(piece);
                std::string w, extra;
                if (!(ps >> w) || (ps >> extra)) {
                    throw ParseError(ctx + ": synonym members must be single words");
                }
                members.insert(to_lower(w));
            }
            if (members.empty()) throw ParseError(ctx + ": empty synonym class");
            g.synonyms_[name] = std::move(members);
            continue;
        }
        if (head != "rule") {
            throw ParseError(ctx + ": expected `syn` or `rule`, got `" + head + "`");
        }

        std::string rest;
        std::getline(ls, rest);
        const auto arrow = rest.find("->");
        if (arrow == std::string::npos) {
            throw ParseError(ctx + ": rule is missing `->`");
        }
        Rule rule;
        rule.source = ctx;

        std::istringstream ps(rest.substr(0, arrow));
        std::string tok;
        while (ps >> tok) {
            PatternToken pt;
            if (tok.front() == '[' && tok.back() == ']') {
                pt.optional = true;
                tok = tok.substr(1, tok.size() - 2);
            }
            if (tok == "{NUM}") {
                pt.kind = TokKind::kNum;
            } else if (tok == "{UNIT}") {
                pt.kind = TokKind::kUnit;
            } else if (tok == "{NP}") {
                pt.kind = TokKind::kNounPhrase;
            } else if (std::all_of(tok.begin(), tok.end(), [](unsigned char c) {
                           return std::isupper(c) || c == '_';
                       })) {
                pt.kind = TokKind::kSynonym;
                pt.value = tok;
                if (!g.synonyms_.count(tok)) {
                    throw ParseError(ctx + ": unknown synonym class " + tok);
                }
            } else {
                pt.kind = TokKind::kLiteral;
                pt.value = to_lower(tok);
            }
            if (pt.optional && (pt.kind == TokKind::kNum ||
                                pt.kind == TokKind::kUnit ||
                                pt.kind == TokKind::kNounPhrase)) {
                // Optional magnitudes are expressed with a second rule
                // instead; keeps capture binding unambiguous.
                throw ParseError(ctx + ": only words may be optional");
            }
            rule.pattern.push_back(std::move(pt));
        }
        if (rule.pattern.empty()) throw ParseError(ctx + ": empty pattern");

        std::string rhs = rest.substr(arrow + 2);
        const auto lparen = rhs.find('(');
        const auto rparen = rhs.rfind(')');
        if (lparen == std::string::npos || rparen == std::string::npos ||
            rparen < lparen) {
            throw ParseError(ctx + ": rule action must look like name(args)");
        }
        std::string name;
        std::istringstream ns(rhs.substr(0, lparen));
        ns >> name;
        rule.macro = macro_name_from_string(name);

        std::string args = rhs.substr(lparen + 1, rparen - lparen - 1);
        std::istringstream as(args);
        std::string arg;
        while (std::getline(as, arg, ',')) {
            std::istringstream trim(arg);
            std::string a;
            trim >> a;
            if (a.empty()) continue;
            const auto eq = a.find('=');
            const std::string key = a.substr(0, eq);
            Binding b;
            if (key == "dist") b = Binding::kDist;
            else if (key == "angle") b = Binding::kAngle;
            else if (key == "landmark") b = Binding::kLandmark;
            else if (key == "landmark2") b = Binding::kLandmark2;
            else throw ParseError(ctx + ": unknown parameter " + key);
            if (eq != std::string::npos) {
                const auto num = parse_number(a.substr(eq + 1));
                if (!num || (b != Binding::kDist && b != Binding::kAngle)) {
                    throw ParseError(ctx + ": fixed values are numeric and only "
                                           "for dist/angle");
                }
                rule.fixed.push_back({b, *num});
            } else {
                rule.bindings.push_back(b);
            }
        }

        // Bindings may not outnumber captures; extra captures are discarded.
        int nums = 0, nps = 0;
        for (const auto& p : rule.pattern) {
            nums += p.kind == TokKind::kNum;
            nps += p.kind == TokKind::kNounPhrase;
        }
        int want_vals = 0, want_nps = 0;
        for (Binding b : rule.bindings) {
            if (b == Binding::kDist || b == Binding::kAngle) ++want_vals;
            else ++want_nps;
        }
        if (want_vals > nums || want_nps > nps) {
            throw ParseError(ctx + ": more bindings than {NUM}/{NP} captures");
        }
        g.rules_.push_back(std::move(rule));
    }
    if (g.rules_.empty()) throw ParseError(origin + ": grammar defines no rules");

    // Tokens that may start a clause: expansions of each rule's leading
    // tokens while those are optional. Used to split on "and" only between
    // clauses, never inside a noun-phrase list.
    for (const Rule& r : g.rules_) {
        for (const PatternToken& p : r.pattern) {
            if (p.kind == TokKind::kLiteral) {
                g.start_tokens_.insert(p.value);
            } else if (p.kind == TokKind::kSynonym) {
                const auto& members = g.synonyms_.at(p.value);
                g.start_tokens_.insert(members.begin(), members.end());
            }
            if (!p.optional) break;
        }
    }
    return g;
}

bool Grammar::is_clause_start(const std::string& token) const {
    return start_tokens_.count(token) > 0;
}

std::vector<std::string> Grammar::split_clauses(const std::string& text) const {
    std::vector<std::string> clauses;
    for (const auto& sentence : tokenize_sentences(text)) {
        std::vector<std::string> cur;
        auto flush = [&]() {
            if (cur.empty()) return;
            std::string joined;
            for (const auto& t : cur) {
                if (!joined.empty()) joined += ' ';
                joined += t;
            }
            clauses.push_back(joined);
            cur.clear();
        };
        for (std::size_t k = 0; k < sentence.size(); ++k) {
            const std::string& tok = sentence[k];
            if (tok == "then") {
                flush();
                continue;
            }
            if (tok == "and") {
                std::size_t next = k + 1;
                while (next < sentence.size() && sentence[next] == "then") ++next;
                if (next < sentence.size() && is_clause_start(sentence[next])) {
                    flush();
                    continue;
                }
            }
            cur.push_back(tok);
        }
        flush();
    }
    return clauses;
}

std::optional<MacroAction> Grammar::match_rule(
    const Rule& rule, const std::vector<std::string>& tokens) const {
    struct Captures {
        std::vector<double> nums;
        std::vector<Unit> units;
        std::vector<std::string> nps;
    };
    Captures caps;

    // Backtracking matcher; {NP} tries the shortest span first so trailing
    // literals can still consume their words.
    std::function<bool(std::size_t, std::size_t)> match =
        [&](std::size_t pi, std::size_t ti) -> bool {
        if (pi == rule.pattern.size()) return ti == tokens.size();
        const PatternToken& p = rule.pattern[pi];
        switch (p.kind) {
            case TokKind::kLiteral:
            case TokKind::kSynonym: {
                const bool here =
                    ti < tokens.size() &&
                    (p.kind == TokKind::kLiteral
                         ? tokens[ti] == p.value
                         : synonyms_.at(p.value).count(tokens[ti]) > 0);
                if (here && match(pi + 1, ti + 1)) return true;
                if (p.optional && match(pi + 1, ti)) return true;
                return false;
            }
            case TokKind::kNum: {
                if (ti >= tokens.size()) return false;
                const auto num = parse_number(tokens[ti]);
                if (!num) return false;
                caps.nums.push_back(*num);
                if (match(pi + 1, ti + 1)) return true;
                caps.nums.pop_back();
                return false;
            }
            case TokKind::kUnit: {
                if (ti >= tokens.size()) return false;
                const auto unit = lookup_unit(tokens[ti]);
                if (!unit) return false;
                caps.units.push_back(*unit);
                if (match(pi + 1, ti + 1)) return true;
                caps.units.pop_back();
                return false;
            }
            case TokKind::kNounPhrase: {
                for (std::size_t len = 1; ti + len <= tokens.size(); ++len) {
                    std::vector<std::string> span(tokens.begin() + ti,
                                                  tokens.begin() + ti + len);
                    while (!span.empty() && is_article(span.front())) {
                        span.erase(span.begin());
                    }
                    if (span.empty()) continue;
                    std::string np;
                    for (const auto& w : span) {
                        if (!np.empty()) np += ' ';
                        np += w;
                    }
                    caps.nps.push_back(np);
                    if (match(pi + 1, ti + len)) return true;
                    caps.nps.pop_back();
                }
                return false;
            }
        }
        return false;
    };

    if (!match(0, 0)) return std::nullopt;

    MacroAction action;
    action.name = rule.macro;
    std::size_t val_idx = 0, np_idx = 0;
    for (Binding b : rule.bindings) {
        switch (b) {
            case Binding::kDist: {
                if (val_idx >= caps.nums.size() ||
                    val_idx >= caps.units.size() || caps.units[val_idx].is_angle)
                    return std::nullopt;
                action.dist = caps.nums[val_idx] * caps.units[val_idx].factor;
                ++val_idx;
                break;
            }
            case Binding::kAngle: {
                if (val_idx >= caps.nums.size() ||
                    val_idx >= caps.units.size() || !caps.units[val_idx].is_angle)
                    return std::nullopt;
                action.angle = caps.nums[val_idx] * caps.units[val_idx].factor;
                ++val_idx;
                break;
            }
            case Binding::kLandmark:
                action.landmark = caps.nps[np_idx++];
                break;
            case Binding::kLandmark2:
                action.landmark2 = caps.nps[np_idx++];
                break;
        }
    }
    for (const FixedParam& f : rule.fixed) {
        if (f.target == Binding::kDist) action.dist = f.value;
        if (f.target == Binding::kAngle) action.angle = f.value;
    }
    return action;
}

MacroProgram Grammar::parse_instruction(const std::string& text) const {
    if (text.empty()) throw ValidationError("instruction is empty");
    const std::vector<std::string> clauses = split_clauses(text);
    if (clauses.empty()) {
        throw ValidationError("instruction holds no clauses: \"" + text + "\"");
    }
    MacroProgram prog;
    for (const std::string& clause : clauses) {
        std::vector<std::string> tokens;
        std::istringstream in(clause);
        std::string t;
        while (in >> t) tokens.push_back(t);

        std::optional<MacroAction> matched;
        for (const Rule& rule : rules_) {
            matched = match_rule(rule, tokens);
            if (matched) break;
        }
        if (!matched) throw UnparsableClause(clause);
        prog.push_back(std::move(*matched));
    }
    return prog;
}

json macro_to_json(const MacroAction& action) {
    json j;
    j["name"] = to_string(action.name);
    if (action.dist) j["dist"] = *action.dist;
    if (action.angle) j["angle"] = *action.angle;
    if (!action.landmark.empty()) j["landmark"] = action.landmark;
    if (!action.landmark2.empty()) j["landmark2"] = action.landmark2;
    return j;
}

MacroAction macro_from_json(const json& j) {
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string()) {
        throw ParseError("macro-action record needs a string \"name\"");
    }
    MacroAction a;
    a.name = macro_name_from_string(j["name"].get<std::string>());
    if (j.contains("dist")) a.dist = j["dist"].get<double>();
    if (j.contains("angle")) a.angle = j["angle"].get<double>();
    if (j.contains("landmark")) a.landmark = j["landmark"].get<std::string>();
    if (j.contains("landmark2")) a.landmark2 = j["landmark2"].get<std::string>();
    return a;
}

json program_to_json(const MacroProgram& prog) {
    json arr = json::array();
    for (const MacroAction& a : prog) arr.push_back(macro_to_json(a));
    return arr;
}

MacroProgram program_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("macro program must be a JSON array");
    MacroProgram prog;
    for (const auto& item : j) prog.push_back(macro_from_json(item));
    return prog;
}

}  // namespace vlnav
