#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tucker/model.hpp"
#include "tucker/tensor.hpp"

namespace tucker {

struct Triple {
  EntityId s = 0;
  RelationId r = 0;
  EntityId o = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Dense, first-appearance-ordered ids for entity and relation names.
/// Relation r has reciprocal r + n_r in the augmented id space.
class Vocabulary {
 public:
  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name);

  [[nodiscard]] std::optional<EntityId> find_entity(std::string_view name) const;
  [[nodiscard]] std::optional<RelationId> find_relation(std::string_view name) const;

  [[nodiscard]] std::size_t num_entities() const { return entity_names_.size(); }
  [[nodiscard]] std::size_t num_relations() const { return relation_names_.size(); }
  [[nodiscard]] std::size_t num_augmented_relations() const { return 2 * num_relations(); }

  [[nodiscard]] const std::string& entity_name(EntityId id) const;
  /// Reciprocal ids render as "<name>_reverse".
  [[nodiscard]] std::string relation_name(RelationId id) const;
  /// Resolves raw names and "<name>_reverse" to augmented ids.
  [[nodiscard]] std::optional<RelationId> find_augmented_relation(std::string_view name) const;

  [[nodiscard]] RelationId reciprocal(RelationId r) const;

  /// Writes "name<TAB>id" lines.
  void save_entities(const std::filesystem::path& path) const;
  void save_relations(const std::filesystem::path& path) const;
  /// Reads the dumps written by save_*; ids must be dense and in file order.
  static Vocabulary load(const std::filesystem::path& entities_path,
                         const std::filesystem::path& relations_path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entity_names_ == b.entity_names_ && a.relation_names_ == b.relation_names_;
  }

 private:
  std::vector<std::string> entity_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

struct TripleStore {
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;
  bool augmented = false;

  [[nodiscard]] std::size_t total() const { return train.size() + valid.size() + test.size(); }
};

struct Dataset {
  TripleStore store;
  Vocabulary vocab;
};

enum class VocabMode { Build, Reuse };

/// Parses one TAB-separated triple file. In Build mode new names extend
/// `vocab`; in Reuse mode an unknown name is a DataError. Duplicate lines are
/// dropped with a warning.
std::vector<Triple> read_triple_file(const std::filesystem::path& path, Vocabulary& vocab,
                                     VocabMode mode);

/// Loads train.txt, valid.txt and test.txt from `dir`. In Reuse mode `vocab`
/// must already cover every name.
Dataset load_triples(const std::filesystem::path& dir, VocabMode mode, Vocabulary vocab = {});

/// Writes the raw (non-reciprocal) triples as train/valid/test.txt plus
/// entities.dict and relations.dict.
void write_dataset(const std::filesystem::path& dir, const Dataset& data);

/// Adds (o, r + n_r, s) for every (s, r, o) in each split.
TripleStore augment_reciprocal(const TripleStore& ts, const Vocabulary& vocab);

/// (s, r) -> every o with (s, r, o) in train, valid or test.
class FilterIndex {
 public:
  void insert(const Triple& t);
  /// Sorted object ids; empty for an unknown pair.
  [[nodiscard]] const std::vector<EntityId>& objects(EntityId s, RelationId r) const;
  [[nodiscard]] bool contains(const Triple& t) const;
  [[nodiscard]] std::size_t num_pairs() const { return map_.size(); }
  void finalize();

 private:
  static std::uint64_t key(EntityId s, RelationId r) {
    return (static_cast<std::uint64_t>(s) << 32) | r;
  }
  std::unordered_map<std::uint64_t, std::vector<EntityId>> map_;
};

FilterIndex build_filter_index(const TripleStore& ts);

struct QueryPair {
  EntityId s = 0;
  RelationId r = 0;

  friend auto operator<=>(const QueryPair&, const QueryPair&) = default;
};

/// Unique (s, r) training pairs with their true objects, ordered by (s, r).
struct TrainingPairs {
  std::vector<QueryPair> pairs;
  std::vector<std::vector<EntityId>> targets;
  std::size_t num_entities = 0;
};

TrainingPairs collect_training_pairs(const TripleStore& ts, std::size_t n_e);

/// A 1-N batch: query pairs with the sparse set of true training objects.
struct Batch {
  std::vector<QueryPair> pairs;
  std::vector<std::vector<EntityId>> targets;

  [[nodiscard]] std::size_t size() const { return pairs.size(); }
  /// Dense 0/1 labels, one row per pair.
  [[nodiscard]] DenseMatrix label_matrix(std::size_t n_e) const;
};

/// Shuffles the pairs and cuts them into batches of at most batch_size.
std::vector<Batch> make_1n_batches(const TrainingPairs& pairs, std::size_t batch_size, Rng& rng);
std::vector<Batch> make_1n_batches(const TripleStore& ts, std::size_t n_e,
                                   std::size_t batch_size, Rng& rng);

/// Relation names used by the synthetic world.
inline constexpr std::string_view kSynthSymmetric = "similar_to";
inline constexpr std::string_view kSynthOrder = "precedes";
inline constexpr std::string_view kSynthFirstMap = "maps_a";
inline constexpr std::string_view kSynthSecondMap = "maps_b";
inline constexpr std::string_view kSynthComposed = "maps_ab";

/// A small world with a symmetric relation, a strict total order over a hidden
/// chain of 30% of the entities and a composed pair maps_ab = maps_b . maps_a. Facts are
/// split 80/10/10 such that every entity and relation occurs in train; ids
/// follow first appearance over train, valid, test.
Dataset generate_synthetic(std::size_t n_e, std::uint64_t seed);

}  // namespace tucker
