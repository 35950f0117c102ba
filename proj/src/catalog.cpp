#include "coregame/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <tuple>

namespace coregame {

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::Performance: return "Performance";
    case Dimension::Ecological: return "Ecological";
    case Dimension::Social: return "Social";
    case Dimension::Personal: return "Personal";
    case Dimension::Fictional: return "Fictional";
  }
  return "?";
}

Dimension dimension_from_string(std::string_view text) {
  for (auto d : kAllDimensions) {
    if (to_string(d) == text) return d;
  }
  // Questionnaire section names.
  if (text == "Performance & Measurement") return Dimension::Performance;
  if (text == "Environment") return Dimension::Ecological;
  if (text == "Fiction") return Dimension::Fictional;
  throw Error(ErrorCode::Validation, "unknown dimension '" + std::string(text) + "'", "dimension");
}

namespace {

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

ExpertTally& tally_for(std::vector<ExpertTally>& out, CognitiveCore core, Dimension dim) {
  auto it = std::find_if(out.begin(), out.end(),
                         [&](const ExpertTally& t) { return t.core == core && t.dimension == dim; });
  if (it != out.end()) return *it;
  out.push_back(ExpertTally{core, dim, {}});
  return out.back();
}

}  // namespace

ElementCatalog::ElementCatalog(std::vector<GameElement> elements) : elements_(std::move(elements)) {
  std::set<ElementId> ids;
  std::map<std::string, ElementId> names;
  std::map<Dimension, std::set<int>> ranks;
  for (const auto& e : elements_) {
    if (e.element_id.empty()) throw Error(ErrorCode::Configuration, "element with empty id", "element_id");
    if (!ids.insert(e.element_id).second) {
      throw Error(ErrorCode::Configuration, "duplicate element id '" + e.element_id + "'", "element_id");
    }
    if (!ranks[e.dimension].insert(e.catalog_rank).second) {
      throw Error(ErrorCode::Configuration,
                  "duplicate catalog_rank " + std::to_string(e.catalog_rank) + " in " +
                      std::string(to_string(e.dimension)),
                  "catalog_rank");
    }
    std::vector<std::string> keys{normalize(e.element_id), normalize(e.name)};
    for (const auto& a : e.aliases) keys.push_back(normalize(a));
    for (const auto& key : keys) {
      auto [it, inserted] = names.emplace(key, e.element_id);
      if (!inserted && it->second != e.element_id) {
        throw Error(ErrorCode::Configuration, "name or alias '" + key + "' is ambiguous", "aliases");
      }
    }
  }
}

ElementCatalog ElementCatalog::from_json(const Json& doc) {
  std::vector<GameElement> elements;
  for (const auto& j : doc.at("elements")) {
    GameElement e;
    e.element_id = j.at("id").get<std::string>();
    e.name = j.at("name").get<std::string>();
    e.dimension = dimension_from_string(j.at("dimension").get<std::string>());
    e.description = j.value("description", "");
    e.catalog_rank = j.at("rank").get<int>();
    if (j.contains("aliases")) e.aliases = j["aliases"].get<std::vector<std::string>>();
    elements.push_back(std::move(e));
  }
  return ElementCatalog(std::move(elements));
}

ElementCatalog ElementCatalog::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

const ElementCatalog& ElementCatalog::standard() {
  static const ElementCatalog instance = load(data_file("element_catalog.json"));
  return instance;
}

std::vector<const GameElement*> ElementCatalog::in_dimension(Dimension d) const {
  std::vector<const GameElement*> out;
  for (const auto& e : elements_) {
    if (e.dimension == d) out.push_back(&e);
  }
  std::sort(out.begin(), out.end(),
            [](const GameElement* a, const GameElement* b) { return a->catalog_rank < b->catalog_rank; });
  return out;
}

bool ElementCatalog::contains(const ElementId& id) const {
  return std::any_of(elements_.begin(), elements_.end(), [&](const GameElement& e) { return e.element_id == id; });
}

const GameElement& ElementCatalog::at(const ElementId& id) const {
  for (const auto& e : elements_) {
    if (e.element_id == id) return e;
  }
  throw Error(ErrorCode::NotFound, "element '" + id + "' not in catalog", "element_id");
}

const GameElement* ElementCatalog::resolve(std::string_view name_or_alias) const {
  const auto key = normalize(name_or_alias);
  for (const auto& e : elements_) {
    if (normalize(e.element_id) == key || normalize(e.name) == key) return &e;
  }
  for (const auto& e : elements_) {
    for (const auto& a : e.aliases) {
      if (normalize(a) == key) return &e;
    }
  }
  return nullptr;
}

const GameElement& ElementCatalog::resolve_or_throw(std::string_view name_or_alias) const {
  if (const auto* e = resolve(name_or_alias)) return *e;
  throw Error(ErrorCode::Validation, "unknown game element '" + std::string(name_or_alias) + "'", "element");
}

void validate_tally(const ExpertTally& tally, const ElementCatalog& catalog) {
  for (const auto& [id, votes] : tally.votes) {
    const auto& e = catalog.at(id);
    if (e.dimension != tally.dimension) {
      throw Error(ErrorCode::Validation,
                  "element '" + id + "' belongs to " + std::string(to_string(e.dimension)) + ", not " +
                      std::string(to_string(tally.dimension)),
                  "element");
    }
    if (votes < 0) throw Error(ErrorCode::Validation, "negative vote count for '" + id + "'", "votes");
  }
}

std::vector<ExpertTally> parse_tallies_csv(std::string_view text, const ElementCatalog& catalog) {
  auto rows = parse_csv(text);
  if (rows.empty() || rows.front() != std::vector<std::string>{"core", "dimension", "element", "votes"}) {
    throw Error(ErrorCode::Validation, "tally CSV must start with header core,dimension,element,votes", "header");
  }
  std::vector<ExpertTally> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) {
      throw Error(ErrorCode::Validation, "tally row " + std::to_string(i) + " has " + std::to_string(r.size()) +
                                             " fields", "row");
    }
    const auto core = core_from_string(trim(r[0]));
    const auto dim = dimension_from_string(trim(r[1]));
    const auto& element = catalog.resolve_or_throw(trim(r[2]));
    int votes = 0;
    const auto v = trim(r[3]);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), votes);
    if (ec != std::errc{} || ptr != v.data() + v.size() || votes < 0) {
      throw Error(ErrorCode::Validation, "bad vote count '" + std::string(v) + "'", "votes");
    }
    auto& tally = tally_for(out, core, dim);
    tally.votes[element.element_id] += votes;
  }
  for (const auto& t : out) validate_tally(t, catalog);
  return out;
}

std::vector<ExpertTally> load_tallies_csv(const std::filesystem::path& path, const ElementCatalog& catalog) {
  return parse_tallies_csv(read_text_file(path), catalog);
}

std::vector<ExpertTally> aggregate_expert_selections(std::string_view text, const ElementCatalog& catalog) {
  auto rows = parse_csv(text);
  if (rows.empty() || rows.front() != std::vector<std::string>{"expert", "core", "dimension", "selections"}) {
    throw Error(ErrorCode::Validation, "selection CSV must start with header expert,core,dimension,selections",
                "header");
  }
  std::vector<ExpertTally> out;
  std::set<std::tuple<std::string, CognitiveCore, Dimension>> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw Error(ErrorCode::Validation, "selection row " + std::to_string(i) + " malformed", "row");
    const auto core = core_from_string(trim(r[1]));
    const auto dim = dimension_from_string(trim(r[2]));
    if (!seen.emplace(std::string(trim(r[0])), core, dim).second) {
      throw Error(ErrorCode::Validation,
                  "expert '" + std::string(trim(r[0])) + "' answered " + std::string(to_string(core)) + "/" +
                      std::string(to_string(dim)) + " twice",
                  "expert");
    }
    auto& tally = tally_for(out, core, dim);
    for (const auto* e : catalog.in_dimension(dim)) tally.votes.try_emplace(e->element_id, 0);
    std::set<ElementId> picked;
    std::string_view rest = r[3];
    while (!rest.empty()) {
      const auto cut = rest.find(';');
      const auto token = trim(rest.substr(0, cut));
      rest = cut == std::string_view::npos ? std::string_view{} : rest.substr(cut + 1);
      if (token.empty()) continue;
      const auto& e = catalog.resolve_or_throw(token);
      if (picked.insert(e.element_id).second) ++tally.votes[e.element_id];
    }
  }
  for (const auto& t : out) validate_tally(t, catalog);
  return out;
}

DerivationConfig DerivationConfig::defaults() {
  DerivationConfig config;
  config.feasibility_exclusions = {"cooperation", "narrative", "storytelling", "reputation"};
  config.dimension_subsets = {
      {CognitiveCore::NT, {Dimension::Ecological, Dimension::Social, Dimension::Personal}},
      {CognitiveCore::ST, {Dimension::Ecological, Dimension::Performance, Dimension::Personal}},
      {CognitiveCore::NF, {Dimension::Performance, Dimension::Ecological, Dimension::Social}},
      {CognitiveCore::SF, {Dimension::Performance, Dimension::Ecological, Dimension::Personal}},
  };
  return config;
}

DerivationConfig DerivationConfig::from_json(const Json& doc, const ElementCatalog& catalog) {
  DerivationConfig config;
  for (const auto& name : doc.value("exclusions", Json::array())) {
    config.feasibility_exclusions.insert(catalog.resolve_or_throw(name.get<std::string>()).element_id);
  }
  for (const auto& [core_name, dims] : doc.at("dimension_subsets").items()) {
    auto& list = config.dimension_subsets[core_from_string(core_name)];
    for (const auto& d : dims) list.push_back(dimension_from_string(d.get<std::string>()));
  }
  const auto tie = doc.value("tie_break", std::string("catalog_rank"));
  if (tie != "catalog_rank") {
    throw Error(ErrorCode::Configuration, "unsupported tie_break rule '" + tie + "'", "tie_break");
  }
  config.validate();
  return config;
}

DerivationConfig DerivationConfig::load(const std::filesystem::path& path, const ElementCatalog& catalog) {
  return from_json(read_json_file(path), catalog);
}

void DerivationConfig::validate() const {
  for (const auto& [core, dims] : dimension_subsets) {
    if (dims.empty()) {
      throw Error(ErrorCode::Configuration,
                  "dimension subset for " + std::string(to_string(core)) + " is empty", "dimension_subsets");
    }
    std::set<Dimension> unique(dims.begin(), dims.end());
    if (unique.size() != dims.size()) {
      throw Error(ErrorCode::Configuration,
                  "dimension subset for " + std::string(to_string(core)) + " repeats a dimension",
                  "dimension_subsets");
    }
  }
}

ElementMapping::ElementMapping(std::map<CognitiveCore, std::vector<ElementId>> entries,
                               const ElementCatalog& catalog)
    : entries_(std::move(entries)) {
  for (auto core : kAllCores) {
    auto it = entries_.find(core);
    if (it == entries_.end()) {
      throw Error(ErrorCode::Derivation, "mapping is not total: no tuple for " + std::string(to_string(core)),
                  "entries");
    }
    if (it->second.empty()) {
      throw Error(ErrorCode::Derivation, "mapping assigns an empty tuple to " + std::string(to_string(core)),
                  "entries");
    }
    for (const auto& id : it->second) {
      if (!catalog.contains(id)) {
        throw Error(ErrorCode::Derivation, "mapping references unknown element '" + id + "'", "entries");
      }
    }
  }
}

Json ElementMapping::to_json() const {
  Json doc = Json::object();
  for (const auto& [core, tuple] : entries_) doc[std::string(to_string(core))] = tuple;
  return doc;
}

ElementMapping ElementMapping::from_json(const Json& doc, const ElementCatalog& catalog) {
  std::map<CognitiveCore, std::vector<ElementId>> entries;
  for (const auto& [core_name, tuple] : doc.items()) {
    auto& list = entries[core_from_string(core_name)];
    for (const auto& name : tuple) list.push_back(catalog.resolve_or_throw(name.get<std::string>()).element_id);
  }
  return ElementMapping(std::move(entries), catalog);
}

const ElementMapping& deployed_mapping() {
  static const ElementMapping instance(
      {
          {CognitiveCore::NT, {"time_pressure", "competition", "puzzle"}},
          {CognitiveCore::ST, {"economy", "stats", "puzzle"}},
          {CognitiveCore::NF, {"progression", "choice", "competition"}},
          {CognitiveCore::SF, {"acknowledgement", "choice", "sensation"}},
      },
      ElementCatalog::standard());
  return instance;
}

const GameElement& dimension_winner(const ExpertTally& tally, const std::set<ElementId>& exclusions,
                                    const ElementCatalog& catalog) {
  validate_tally(tally, catalog);
  const GameElement* best = nullptr;
  int best_votes = -1;
  for (const auto& [id, votes] : tally.votes) {
    if (exclusions.contains(id)) continue;
    const auto& e = catalog.at(id);
    if (votes > best_votes || (votes == best_votes && e.catalog_rank < best->catalog_rank)) {
      best = &e;
      best_votes = votes;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorCode::Derivation,
                "no eligible element for " + std::string(to_string(tally.core)) + " in dimension " +
                    std::string(to_string(tally.dimension)) + " after exclusions",
                std::string(to_string(tally.dimension)));
  }
  return *best;
}

ElementMapping derive_mapping(const std::vector<ExpertTally>& tallies, const DerivationConfig& config,
                              const ElementCatalog& catalog) {
  config.validate();
  std::map<CognitiveCore, std::vector<ElementId>> entries;
  for (const auto& [core, dims] : config.dimension_subsets) {
    auto& tuple = entries[core];
    for (auto dim : dims) {
      auto it = std::find_if(tallies.begin(), tallies.end(),
                             [&](const ExpertTally& t) { return t.core == core && t.dimension == dim; });
      if (it == tallies.end()) {
        throw Error(ErrorCode::Derivation,
                    "missing tally for " + std::string(to_string(core)) + " x " + std::string(to_string(dim)),
                    "tallies");
      }
      tuple.push_back(dimension_winner(*it, config.feasibility_exclusions, catalog).element_id);
    }
  }
  return ElementMapping(std::move(entries), catalog);
}

}  // namespace coregame
