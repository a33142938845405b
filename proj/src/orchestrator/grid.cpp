#include "arena/orchestrator/grid.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "arena/errors.hpp"
#include "arena/util/text.hpp"

namespace arena {

namespace {

double number_of(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash != std::string::npos) return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
      return std::stod(s);
    } catch (const std::exception&) {
    }
  }
  throw GridFormatError(fmt::format("{}: '{}' is not a number", where, v.dump()));
}

const json& axis(const json& family, const char* key, const std::string& fam) {
  if (!family.contains(key)) throw GridFormatError(fmt::format("{}: missing axis \"{}\"", fam, key));
  const auto& a = family.at(key);
  if (!a.is_array()) throw GridFormatError(fmt::format("{}.{} must be a list", fam, key));
  return a;
}

template <typename F>
auto map_axis(const json& family, const char* key, const std::string& fam, F&& f) {
  using T = decltype(f(json{}, std::string{}));
  std::vector<T> out;
  const auto where = fmt::format("{}.{}", fam, key);
  for (const auto& v : axis(family, key, fam)) out.push_back(f(v, where));
  return out;
}

std::vector<double> doubles(const json& fam_j, const char* key, const std::string& fam) {
  return map_axis(fam_j, key, fam, [](const json& v, const std::string& w) { return number_of(v, w); });
}

std::vector<std::int64_t> amounts(const json& fam_j, const char* key, const std::string& fam) {
  return map_axis(fam_j, key, fam, [](const json& v, const std::string& w) {
    const double d = number_of(v, w);
    if (d != static_cast<double>(static_cast<std::int64_t>(d))) {
      throw GridFormatError(fmt::format("{}: money must be a whole number, got {}", w, d));
    }
    return static_cast<std::int64_t>(d);
  });
}

std::vector<bool> flags(const json& fam_j, const char* key, const std::string& fam) {
  return map_axis(fam_j, key, fam, [](const json& v, const std::string& w) {
    if (!v.is_boolean()) throw GridFormatError(fmt::format("{}: expected true/false", w));
    return v.get<bool>();
  });
}

std::vector<Horizon> horizons(const json& fam_j, int cap, const std::string& fam) {
  return map_axis(fam_j, "horizon", fam, [cap](const json& v, const std::string& w) {
    if (v.is_string() && (v == "inf" || v == "infinite")) return Horizon::unbounded(cap);
    if (v.is_number_integer() && v.get<int>() >= 1) return Horizon::finite(v.get<int>());
    throw GridFormatError(fmt::format("{}: horizon must be a positive integer or \"inf\", got {}", w, v.dump()));
  });
}

json horizon_json(const Horizon& h) { return h.infinite ? json("inf") : json(h.rounds); }

template <typename T, typename F>
json list(const std::vector<T>& xs, F&& f) {
  json out = json::array();
  for (const auto& x : xs) out.push_back(f(x));
  return out;
}

const auto ident = [](const auto& x) { return json(x); };

}  // namespace

GridSpec grid_from_json(const json& j) {
  if (!j.is_object()) throw GridFormatError("grid must be a JSON object");
  GridSpec spec;
  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> known{"infinite_cap", "bargaining", "negotiation", "persuasion",
                                             "roster", "repetitions"};
    if (!key.empty() && key.front() != '_' && !known.count(key)) {
      throw GridFormatError(fmt::format("unknown grid key \"{}\"", key));
    }
  }
  try {
    spec.infinite_cap = j.value("infinite_cap", kDefaultInfiniteCap);
    if (spec.infinite_cap < 1) throw GridFormatError("infinite_cap must be >= 1");
    if (j.contains("bargaining")) {
      const auto& b = j.at("bargaining");
      spec.bargaining = BargainingAxes{doubles(b, "delta_a", "bargaining"),   doubles(b, "delta_b", "bargaining"),
                                       amounts(b, "money", "bargaining"),     horizons(b, spec.infinite_cap, "bargaining"),
                                       flags(b, "complete_info", "bargaining"), flags(b, "messages_allowed", "bargaining")};
    }
    if (j.contains("negotiation")) {
      const auto& n = j.at("negotiation");
      spec.negotiation = NegotiationAxes{doubles(n, "f_a", "negotiation"),  doubles(n, "f_b", "negotiation"),
                                         amounts(n, "money", "negotiation"), horizons(n, spec.infinite_cap, "negotiation"),
                                         flags(n, "complete_info", "negotiation"),
                                         flags(n, "messages_allowed", "negotiation")};
    }
    if (j.contains("persuasion")) {
      const auto& p = j.at("persuasion");
      PersuasionAxes axes{doubles(p, "prior_p", "persuasion"), doubles(p, "value_v", "persuasion"),
                          amounts(p, "money", "persuasion"), horizons(p, spec.infinite_cap, "persuasion"),
                          flags(p, "complete_info", "persuasion"), {}, {}};
      axes.message_mode = map_axis(p, "message_mode", "persuasion", [](const json& v, const std::string& w) {
        if (v == "binary") return MessageMode::Binary;
        if (v == "text") return MessageMode::FreeText;
        throw GridFormatError(fmt::format("{}: expected \"binary\" or \"text\"", w));
      });
      axes.buyer_mode = map_axis(p, "buyer_mode", "persuasion", [](const json& v, const std::string& w) {
        if (v == "long_living") return BuyerMode::LongLiving;
        if (v == "myopic") return BuyerMode::Myopic;
        throw GridFormatError(fmt::format("{}: expected \"long_living\" or \"myopic\"", w));
      });
      for (const auto& h : axes.horizon) {
        if (h.infinite) throw GridFormatError("persuasion.horizon must be finite");
      }
      spec.persuasion = std::move(axes);
    }
    if (j.contains("roster")) {
      for (const auto& p : j.at("roster")) spec.roster.push_back(parse_agent_pair(p.get<std::string>()));
    }
    spec.repetitions = j.value("repetitions", 1);
    if (spec.repetitions < 1) throw GridFormatError("repetitions must be >= 1");
  } catch (const json::exception& e) {
    throw GridFormatError(e.what());
  } catch (const InvalidAgentSpec& e) {
    throw GridFormatError(fmt::format("roster: {}", e.what()));
  }
  return spec;
}

GridSpec load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GridFormatError(fmt::format("cannot open grid file {}", path.string()));
  try {
    return grid_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw GridFormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

json to_json(const GridSpec& spec) {
  json j{{"infinite_cap", spec.infinite_cap}, {"repetitions", spec.repetitions}};
  if (const auto& b = spec.bargaining) {
    j["bargaining"] = {{"delta_a", b->delta_a}, {"delta_b", b->delta_b}, {"money", b->money},
                       {"horizon", list(b->horizon, horizon_json)}, {"complete_info", list(b->complete_info, ident)},
                       {"messages_allowed", list(b->messages_allowed, ident)}};
  }
  if (const auto& n = spec.negotiation) {
    j["negotiation"] = {{"f_a", n->f_a}, {"f_b", n->f_b}, {"money", n->money},
                        {"horizon", list(n->horizon, horizon_json)}, {"complete_info", list(n->complete_info, ident)},
                        {"messages_allowed", list(n->messages_allowed, ident)}};
  }
  if (const auto& p = spec.persuasion) {
    j["persuasion"] = {{"prior_p", p->prior_p},
                       {"value_v", p->value_v},
                       {"money", p->money},
                       {"horizon", list(p->horizon, horizon_json)},
                       {"complete_info", list(p->complete_info, ident)},
                       {"message_mode", list(p->message_mode, [](auto m) { return json(std::string(to_string(m))); })},
                       {"buyer_mode", list(p->buyer_mode, [](auto m) { return json(std::string(to_string(m))); })}};
  }
  json roster = json::array();
  for (const auto& p : spec.roster) roster.push_back(pair_to_string(p));
  j["roster"] = roster;
  return j;
}

std::string config_content_id(const GameConfig& config) {
  auto j = to_json(config);
  j.erase("config_id");
  return sha256_hex(j.dump()).substr(0, 16);
}

std::string grid_hash(const std::vector<GameConfig>& configs) {
  std::string ids;
  for (const auto& c : configs) {
    ids += c.config_id;
    ids += '\n';
  }
  return sha256_hex(ids).substr(0, 16);
}

std::string pair_to_string(const AgentPair& pair) {
  return pair.first.to_string() + "," + pair.second.to_string();
}

std::vector<GameConfig> expand_grid(const GridSpec& spec) {
  std::vector<GameConfig> out;
  auto add = [&out](FamilyConfig params) {
    GameConfig c{std::move(params), {}};
    try {
      validate(c);
    } catch (const InvalidConfig& e) {
      throw GridFormatError(fmt::format("invalid grid cell: {}", e.what()));
    }
    c.config_id = config_content_id(c);
    out.push_back(std::move(c));
  };
  if (const auto& b = spec.bargaining) {
    for (double da : b->delta_a)
      for (double db : b->delta_b)
        for (auto m : b->money)
          for (const auto& h : b->horizon)
            for (bool ci : b->complete_info)
              for (bool ma : b->messages_allowed) add(BargainingConfig{da, db, m, h, ci, ma});
  }
  if (const auto& n = spec.negotiation) {
    for (double fa : n->f_a)
      for (double fb : n->f_b)
        for (auto m : n->money)
          for (const auto& h : n->horizon)
            for (bool ci : n->complete_info)
              for (bool ma : n->messages_allowed) add(NegotiationConfig{fa, fb, m, h, ci, ma});
  }
  if (const auto& p = spec.persuasion) {
    for (double prior : p->prior_p)
      for (double v : p->value_v)
        for (auto m : p->money)
          for (const auto& h : p->horizon)
            for (bool ci : p->complete_info)
              for (auto mm : p->message_mode)
                for (auto bm : p->buyer_mode) add(PersuasionConfig{prior, v, m, h, ci, mm, bm, std::nullopt});
  }
  if (out.empty()) throw EmptyGrid("grid expands to zero configurations");
  return out;
}

std::string_view grid_format_help() {
  return R"(Grid file format (JSON). Each family is optional; every axis is a list
and the grid is the Cartesian product of all lists.

  {
    "infinite_cap": 50,
    "bargaining":  {"delta_a": [0.8, 0.9], "delta_b": [0.9], "money": [10000],
                    "horizon": [12, "inf"], "complete_info": [true, false],
                    "messages_allowed": [true, false]},
    "negotiation": {"f_a": [0.8, 1.2], "f_b": [1.0], "money": [10000],
                    "horizon": [1, 10, "inf"], "complete_info": [true],
                    "messages_allowed": [false]},
    "persuasion":  {"prior_p": ["1/3", 0.5], "value_v": [1.25, 2], "money": [10000],
                    "horizon": [20], "complete_info": [true],
                    "message_mode": ["binary", "text"],
                    "buyer_mode": ["long_living", "myopic"]},
    "roster": ["spe:spe"],
    "repetitions": 1
  }

Numbers may be fractions written as strings ("1/3"). A horizon is a round count
or "inf" (hidden from agents, capped at infinite_cap rounds). Money is a whole
number of currency units. "roster" and "repetitions" are used when --pair and
--reps are not given.)";
}

}  // namespace arena
