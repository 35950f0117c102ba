#pragma once

// Game-element taxonomy, expert tallies, and the core -> element-tuple mapping.

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "coregame/common.hpp"
#include "coregame/io.hpp"

namespace coregame {

enum class Dimension { Performance, Ecological, Social, Personal, Fictional };

inline constexpr std::array<Dimension, 5> kAllDimensions{Dimension::Ecological, Dimension::Social,
                                                         Dimension::Personal, Dimension::Performance,
                                                         Dimension::Fictional};

std::string_view to_string(Dimension d);
Dimension dimension_from_string(std::string_view text);

using ElementId = std::string;

struct GameElement {
  ElementId element_id;
  std::string name;
  Dimension dimension = Dimension::Performance;
  std::string description;
  int catalog_rank = 0;
  std::vector<std::string> aliases;
};

class ElementCatalog {
 public:
  explicit ElementCatalog(std::vector<GameElement> elements);

  static ElementCatalog from_json(const Json& doc);
  static ElementCatalog load(const std::filesystem::path& path);
  static const ElementCatalog& standard();

  const std::vector<GameElement>& elements() const { return elements_; }
  std::vector<const GameElement*> in_dimension(Dimension d) const;

  bool contains(const ElementId& id) const;
  const GameElement& at(const ElementId& id) const;
  /// Resolves an id, display name, or alias (case-insensitive); nullptr if unknown.
  const GameElement* resolve(std::string_view name_or_alias) const;
  const GameElement& resolve_or_throw(std::string_view name_or_alias) const;

 private:
  std::vector<GameElement> elements_;
};

struct ExpertTally {
  CognitiveCore core = CognitiveCore::NT;
  Dimension dimension = Dimension::Performance;
  std::map<ElementId, int> votes;
};

/// CSV with header `core,dimension,element,votes`; rows for the same
/// (core, dimension) are merged. Element names go through catalog aliases.
std::vector<ExpertTally> parse_tallies_csv(std::string_view text, const ElementCatalog& catalog);
std::vector<ExpertTally> load_tallies_csv(const std::filesystem::path& path, const ElementCatalog& catalog);

/// Raw questionnaire export: `expert,core,dimension,selections` where
/// selections is a ';'-separated multi-select list. Counts selections.
std::vector<ExpertTally> aggregate_expert_selections(std::string_view text, const ElementCatalog& catalog);

void validate_tally(const ExpertTally& tally, const ElementCatalog& catalog);

enum class TieBreak { CatalogRank };

struct DerivationConfig {
  std::set<ElementId> feasibility_exclusions;
  /// Ordered: the derived tuple lists one winner per dimension in this order.
  std::map<CognitiveCore, std::vector<Dimension>> dimension_subsets;
  TieBreak tie_break = TieBreak::CatalogRank;

  static DerivationConfig defaults();
  static DerivationConfig from_json(const Json& doc, const ElementCatalog& catalog);
  static DerivationConfig load(const std::filesystem::path& path, const ElementCatalog& catalog);
  void validate() const;
};

/// Total map F from cognitive core to an ordered, non-empty element tuple.
class ElementMapping {
 public:
  ElementMapping(std::map<CognitiveCore, std::vector<ElementId>> entries, const ElementCatalog& catalog);

  const std::vector<ElementId>& at(CognitiveCore core) const { return entries_.at(core); }
  const std::map<CognitiveCore, std::vector<ElementId>>& entries() const { return entries_; }

  bool operator==(const ElementMapping&) const = default;

  Json to_json() const;
  static ElementMapping from_json(const Json& doc, const ElementCatalog& catalog);

 private:
  std::map<CognitiveCore, std::vector<ElementId>> entries_;
};

/// NT -> (Time Pressure, Competition, Puzzle), ST -> (Economy, Stats, Puzzle),
/// NF -> (Progression, Choice, Competition), SF -> (Acknowledgement, Choice, Sensation).
const ElementMapping& deployed_mapping();

/// Highest-voted non-excluded element; ties go to the lower catalog_rank.
const GameElement& dimension_winner(const ExpertTally& tally, const std::set<ElementId>& exclusions,
                                    const ElementCatalog& catalog = ElementCatalog::standard());

ElementMapping derive_mapping(const std::vector<ExpertTally>& tallies, const DerivationConfig& config,
                              const ElementCatalog& catalog = ElementCatalog::standard());

inline const std::vector<ElementId>& active_elements(CognitiveCore core, const ElementMapping& mapping) {
  return mapping.at(core);
}

}  // namespace coregame
