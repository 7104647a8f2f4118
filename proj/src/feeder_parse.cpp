#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mersim/feeder.hpp"

namespace mersim {

namespace {

std::string trim(std::string_view sv) {
    std::size_t b = 0, e = sv.size();
    while (b < e && std::isspace(static_cast<unsigned char>(sv[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(sv[e - 1]))) --e;
    return std::string(sv.substr(b, e - b));
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_double(const std::string& s, const std::string& origin, int line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(origin, line, "expected a number, found '" + s + "'");
    }
}

// Complex literal: "1.5", "0.3465+1.0179j", "-2.1j", "1e-3-4.2e-1j".
cplx parse_complex(const std::string& s, const std::string& origin, int line) {
    if (s.empty()) throw ParseError(origin, line, "empty complex literal");
    if (s.back() != 'j' && s.back() != 'J') return {parse_double(s, origin, line), 0.0};
    std::string body = s.substr(0, s.size() - 1);
    // find the sign separating real and imaginary parts (skip exponent signs)
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
        char c = body[i];
        if ((c == '+' || c == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    if (split == std::string::npos) {
        if (body.empty() || body == "+" || body == "-") body += "1";
        return {0.0, parse_double(body, origin, line)};
    }
    std::string re = body.substr(0, split);
    std::string im = body.substr(split);
    if (im == "+" || im == "-") im += "1";
    return {parse_double(re, origin, line), parse_double(im, origin, line)};
}

bool parse_bool(const std::string& s, const std::string& origin, int line) {
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw ParseError(origin, line, "expected true/false, found '" + s + "'");
}

std::vector<double> read_profile_csv(const std::string& path, const std::string& origin, int line) {
    std::ifstream in(path);
    if (!in) throw ParseError(origin, line, "cannot open profile file '" + path + "'");
    std::vector<double> vals;
    std::string row;
    int row_no = 0;
    while (std::getline(in, row)) {
        ++row_no;
        std::string t = trim(row);
        if (t.empty() || t[0] == '#') continue;
        if (auto comma = t.find(','); comma != std::string::npos) t = trim(t.substr(0, comma));
        vals.push_back(parse_double(t, path, row_no));
    }
    return vals;
}

struct Section {
    std::string header;  // e.g. "bus", "profile default"
    int line = 0;
    std::map<std::string, std::pair<std::string, int>> kv;  // key -> (value, line)
};

class SectionReader {
  public:
    explicit SectionReader(Section s, std::string origin) : s_(std::move(s)), origin_(std::move(origin)) {}

    std::string require(const std::string& key) {
        auto it = s_.kv.find(key);
        if (it == s_.kv.end())
            throw ParseError(origin_, s_.line, "[" + s_.header + "] is missing key '" + key + "'");
        used_.insert(key);
        return it->second.first;
    }
    std::string optional(const std::string& key, const std::string& fallback) {
        auto it = s_.kv.find(key);
        if (it == s_.kv.end()) return fallback;
        used_.insert(key);
        return it->second.first;
    }
    bool has(const std::string& key) const { return s_.kv.count(key) != 0; }
    int line_of(const std::string& key) const {
        auto it = s_.kv.find(key);
        return it == s_.kv.end() ? s_.line : it->second.second;
    }
    int line() const { return s_.line; }

    void reject_unknown() const {
        for (const auto& [key, val] : s_.kv)
            if (!used_.count(key))
                throw ParseError(origin_, val.second, "unknown key '" + key + "' in [" + s_.header + "]");
    }

  private:
    Section s_;
    std::string origin_;
    std::set<std::string> used_;
};

std::array<double, 3> spread_by_phase(const std::vector<std::string>& toks, PhaseSet phases,
                                      const std::string& origin, int line) {
    if (static_cast<int>(toks.size()) != phases.count())
        throw ParseError(origin, line,
                         "expected " + std::to_string(phases.count()) + " values (one per phase), found " +
                             std::to_string(toks.size()));
    std::array<double, 3> out{};
    std::size_t k = 0;
    for (Phase p : kPhases)
        if (phases.has(p)) out[static_cast<std::size_t>(static_cast<int>(p))] = parse_double(toks[k++], origin, line);
    return out;
}

}  // namespace

Feeder parse_feeder(const std::string& text, const std::string& base_dir, const std::string& origin) {
    std::vector<Section> sections;
    {
        std::istringstream in(text);
        std::string raw;
        int line_no = 0;
        Section* cur = nullptr;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string stripped = raw;
            if (auto hash = stripped.find('#'); hash != std::string::npos) stripped.erase(hash);
            stripped = trim(stripped);
            if (stripped.empty()) continue;
            if (stripped.front() == '[') {
                if (stripped.back() != ']')
                    throw ParseError(origin, line_no, "malformed section header '" + stripped + "'");
                sections.push_back({trim(stripped.substr(1, stripped.size() - 2)), line_no, {}});
                cur = &sections.back();
                if (cur->header.empty()) throw ParseError(origin, line_no, "empty section header");
                continue;
            }
            auto eq = stripped.find('=');
            if (eq == std::string::npos)
                throw ParseError(origin, line_no, "expected 'key = value', found '" + stripped + "'");
            if (!cur) throw ParseError(origin, line_no, "key/value pair before any section header");
            std::string key = trim(stripped.substr(0, eq));
            std::string value = trim(stripped.substr(eq + 1));
            if (key.empty()) throw ParseError(origin, line_no, "empty key");
            if (cur->kv.count(key))
                throw ParseError(origin, line_no, "duplicate key '" + key + "' in [" + cur->header + "]");
            cur->kv[key] = {value, line_no};
        }
    }

    Feeder f;
    std::vector<int> bus_lines, branch_lines, load_lines;
    std::set<std::string> bus_ids, branch_ids;

    for (Section& raw : sections) {
        std::string head = raw.header;
        SectionReader sec(std::move(raw), origin);
        if (head == "feeder") {
            f.name = sec.optional("name", "");
            sec.reject_unknown();
        } else if (head == "bus") {
            Bus b;
            b.id = sec.require("id");
            if (!bus_ids.insert(b.id).second)
                throw ParseError(origin, sec.line(), "duplicate bus id '" + b.id + "'");
            try {
                b.phases = PhaseSet::parse(sec.require("phases"));
            } catch (const std::invalid_argument& e) {
                throw ParseError(origin, sec.line_of("phases"), e.what());
            }
            std::string kind = sec.optional("kind", "junction");
            if (kind == "substation") b.kind = BusKind::substation;
            else if (kind == "load") b.kind = BusKind::load;
            else if (kind == "junction") b.kind = BusKind::junction;
            else throw ParseError(origin, sec.line_of("kind"), "unknown bus kind '" + kind + "'");
            b.nominal_kv = parse_double(sec.require("kv"), origin, sec.line_of("kv"));
            sec.reject_unknown();
            f.buses.push_back(std::move(b));
            bus_lines.push_back(sec.line());
        } else if (head == "branch") {
            Branch br;
            br.id = sec.require("id");
            if (!branch_ids.insert(br.id).second)
                throw ParseError(origin, sec.line(), "duplicate branch id '" + br.id + "'");
            br.from = sec.require("from");
            br.to = sec.require("to");
            std::string kind = sec.require("kind");
            if (kind == "line") br.kind = BranchKind::line;
            else if (kind == "transformer") br.kind = BranchKind::transformer;
            else if (kind == "switch") br.kind = BranchKind::sw;
            else throw ParseError(origin, sec.line_of("kind"), "unknown branch kind '" + kind + "'");
            if (br.kind == BranchKind::sw) {
                std::string role = sec.require("role");
                if (role == "sectionalizing") br.switch_role = SwitchRole::sectionalizing;
                else if (role == "tie") br.switch_role = SwitchRole::tie;
                else throw ParseError(origin, sec.line_of("role"), "unknown switch role '" + role + "'");
                br.normally_open =
                    parse_bool(sec.optional("normally_open", br.switch_role == SwitchRole::tie ? "true" : "false"),
                               origin, sec.line_of("normally_open"));
            }
            try {
                br.phases = PhaseSet::parse(sec.require("phases"));
            } catch (const std::invalid_argument& e) {
                throw ParseError(origin, sec.line_of("phases"), e.what());
            }
            br.length = parse_double(sec.optional("length", "1"), origin, sec.line_of("length"));
            std::vector<std::string> ztoks = split_ws(sec.require("z"));
            if (ztoks.size() != 6)
                throw ParseError(origin, sec.line_of("z"),
                                 "z needs 6 upper-triangle entries (aa ab ac bb bc cc), found " +
                                     std::to_string(ztoks.size()));
            int zi = 0;
            for (int r = 0; r < 3; ++r) {
                for (int c = r; c < 3; ++c) {
                    cplx v = parse_complex(ztoks[static_cast<std::size_t>(zi++)], origin, sec.line_of("z"));
                    br.z(r, c) = v;
                    br.z(c, r) = v;
                }
            }
            sec.reject_unknown();
            f.branches.push_back(std::move(br));
            branch_lines.push_back(sec.line());
        } else if (head == "load") {
            LoadPoint lp;
            lp.bus = sec.require("bus");
            try {
                lp.phases = PhaseSet::parse(sec.require("phases"));
            } catch (const std::invalid_argument& e) {
                throw ParseError(origin, sec.line_of("phases"), e.what());
            }
            lp.kw = spread_by_phase(split_ws(sec.require("kw")), lp.phases, origin, sec.line_of("kw"));
            lp.kvar = spread_by_phase(split_ws(sec.require("kvar")), lp.phases, origin, sec.line_of("kvar"));
            std::string model = sec.optional("model", "constant_power");
            if (model == "constant_power") lp.model = LoadModel::constant_power;
            else if (model == "constant_current") lp.model = LoadModel::constant_current;
            else if (model == "constant_impedance") lp.model = LoadModel::constant_impedance;
            else throw ParseError(origin, sec.line_of("model"), "unknown load model '" + model + "'");
            lp.profile_id = sec.optional("profile", "");
            sec.reject_unknown();
            f.loads.push_back(std::move(lp));
            load_lines.push_back(sec.line());
        } else if (head.rfind("profile", 0) == 0) {
            std::string id = trim(head.substr(7));
            if (id.empty()) throw ParseError(origin, sec.line(), "profile section needs a name: [profile <id>]");
            if (f.profiles.count(id))
                throw ParseError(origin, sec.line(), "duplicate profile id '" + id + "'");
            LoadProfile prof;
            prof.id = id;
            if (sec.has("file")) {
                std::string rel = sec.require("file");
                if (base_dir.empty())
                    throw ParseError(origin, sec.line_of("file"),
                                     "profile file references need a base directory (load from a file)");
                std::filesystem::path p = std::filesystem::path(base_dir) / rel;
                prof.multipliers = read_profile_csv(p.string(), origin, sec.line_of("file"));
            } else {
                std::vector<std::string> toks = split_ws(sec.require("multipliers"));
                prof.multipliers.reserve(toks.size());
                for (const std::string& t : toks)
                    prof.multipliers.push_back(parse_double(t, origin, sec.line_of("multipliers")));
            }
            sec.reject_unknown();
            f.profiles.emplace(id, std::move(prof));
        } else {
            throw ParseError(origin, sec.line(), "unknown section [" + head + "]");
        }
    }

    f.rebuild_indexes();

    // Cross-reference checks with the offending line attached.
    for (std::size_t i = 0; i < f.branches.size(); ++i) {
        for (const std::string* end : {&f.branches[i].from, &f.branches[i].to})
            if (!f.has_bus(*end))
                throw ParseError(origin, branch_lines[i],
                                 "branch '" + f.branches[i].id + "' references unknown bus '" + *end + "'");
    }
    for (std::size_t i = 0; i < f.loads.size(); ++i) {
        if (!f.has_bus(f.loads[i].bus))
            throw ParseError(origin, load_lines[i], "load references unknown bus '" + f.loads[i].bus + "'");
        if (!f.loads[i].profile_id.empty() && !f.profiles.count(f.loads[i].profile_id))
            throw ParseError(origin, load_lines[i],
                             "load references unknown profile '" + f.loads[i].profile_id + "'");
    }

    validate_feeder(f, origin);
    return f;
}

Feeder load_feeder_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feeder file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string dir = std::filesystem::path(path).parent_path().string();
    if (dir.empty()) dir = ".";
    return parse_feeder(buf.str(), dir, path);
}

}  // namespace mersim
