#include "tucker/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include <spdlog/spdlog.h>

#include "tucker/errors.hpp"

namespace tucker {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kReverseSuffix = "_reverse";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<std::pair<std::string, std::uint32_t>> read_dict(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::pair<std::string, std::uint32_t>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected name<TAB>id");
    }
    std::uint32_t id = 0;
    try {
      id = static_cast<std::uint32_t>(std::stoul(std::string(fields[1])));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad id");
    }
    entries.emplace_back(std::string(fields[0]), id);
  }
  return entries;
}

}  // namespace

EntityId Vocabulary::add_entity(std::string_view name) {
  auto [it, inserted] =
      entity_ids_.try_emplace(std::string(name), static_cast<EntityId>(entity_names_.size()));
  if (inserted) entity_names_.emplace_back(name);
  return it->second;
}

RelationId Vocabulary::add_relation(std::string_view name) {
  auto [it, inserted] = relation_ids_.try_emplace(
      std::string(name), static_cast<RelationId>(relation_names_.size()));
  if (inserted) relation_names_.emplace_back(name);
  return it->second;
}

std::optional<EntityId> Vocabulary::find_entity(std::string_view name) const {
  auto it = entity_ids_.find(std::string(name));
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocabulary::find_relation(std::string_view name) const {
  auto it = relation_ids_.find(std::string(name));
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::entity_name(EntityId id) const {
  if (id >= entity_names_.size()) throw IndexError("entity id " + std::to_string(id));
  return entity_names_[id];
}

std::string Vocabulary::relation_name(RelationId id) const {
  if (id >= num_augmented_relations()) throw IndexError("relation id " + std::to_string(id));
  if (id < num_relations()) return relation_names_[id];
  return relation_names_[id - num_relations()] + std::string(kReverseSuffix);
}

std::optional<RelationId> Vocabulary::find_augmented_relation(std::string_view name) const {
  if (auto r = find_relation(name)) return r;
  if (name.ends_with(kReverseSuffix)) {
    if (auto r = find_relation(name.substr(0, name.size() - kReverseSuffix.size()))) {
      return static_cast<RelationId>(*r + num_relations());
    }
  }
  return std::nullopt;
}

RelationId Vocabulary::reciprocal(RelationId r) const {
  const auto n_r = static_cast<RelationId>(num_relations());
  if (r >= 2 * n_r) throw IndexError("relation id " + std::to_string(r));
  return r < n_r ? r + n_r : r - n_r;
}

void Vocabulary::save_entities(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < entity_names_.size(); ++i)
    out << entity_names_[i] << '\t' << i << '\n';
}

void Vocabulary::save_relations(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < relation_names_.size(); ++i) {
    out << relation_names_[i] << '\t' << i << '\n';
  }
}

Vocabulary Vocabulary::load(const fs::path& entities_path, const fs::path& relations_path) {
  Vocabulary vocab;
  for (const auto& [name, id] : read_dict(entities_path)) {
    if (vocab.add_entity(name) != id) {
      throw DataError(entities_path.string() + ": ids must be dense and in file order");
    }
  }
  for (const auto& [name, id] : read_dict(relations_path)) {
    if (vocab.add_relation(name) != id) {
      throw DataError(relations_path.string() + ": ids must be dense and in file order");
    }
  }
  return vocab;
}

std::vector<Triple> read_triple_file(const fs::path& path, Vocabulary& vocab, VocabMode mode) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Triple> triples;
  std::set<Triple> seen;
  std::size_t duplicates = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields, got " +
                      std::to_string(fields.size()));
    }
    Triple t;
    if (mode == VocabMode::Build) {
      t.s = vocab.add_entity(fields[0]);
      t.r = vocab.add_relation(fields[1]);
      t.o = vocab.add_entity(fields[2]);
    } else {
      auto s = vocab.find_entity(fields[0]);
      auto r = vocab.find_relation(fields[1]);
      auto o = vocab.find_entity(fields[2]);
      if (!s || !o) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown entity '" +
                        std::string(!s ? fields[0] : fields[2]) + "'");
      }
      if (!r) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown relation '" +
                        std::string(fields[1]) + "'");
      }
      t = {*s, *r, *o};
    }
    if (!seen.insert(t).second) {
      ++duplicates;
      continue;
    }
    triples.push_back(t);
  }
  if (duplicates > 0) {
    spdlog::warn("{}: dropped {} duplicate triple(s)", path.string(), duplicates);
  }
  return triples;
}

Dataset load_triples(const fs::path& dir, VocabMode mode, Vocabulary vocab) {
  Dataset data;
  data.vocab = std::move(vocab);
  data.store.train = read_triple_file(dir / "train.txt", data.vocab, mode);
  data.store.valid = read_triple_file(dir / "valid.txt", data.vocab, mode);
  data.store.test = read_triple_file(dir / "test.txt", data.vocab, mode);
  spdlog::info("loaded {}: {} entities, {} relations, {}/{}/{} triples", dir.string(),
               data.vocab.num_entities(), data.vocab.num_relations(), data.store.train.size(),
               data.store.valid.size(), data.store.test.size());
  return data;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  const auto n_r = data.vocab.num_relations();
  auto write_split = [&](const std::string& name, const std::vector<Triple>& split) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    for (const auto& t : split) {
      if (t.r >= n_r) continue;
      out << data.vocab.entity_name(t.s) << '\t' << data.vocab.relation_name(t.r) << '\t'
          << data.vocab.entity_name(t.o) << '\n';
    }
  };
  write_split("train.txt", data.store.train);
  write_split("valid.txt", data.store.valid);
  write_split("test.txt", data.store.test);
  data.vocab.save_entities(dir / "entities.dict");
  data.vocab.save_relations(dir / "relations.dict");
}

TripleStore augment_reciprocal(const TripleStore& ts, const Vocabulary& vocab) {
  if (ts.augmented) throw std::logic_error("triple store already has reciprocal relations");
  const auto n_r = static_cast<RelationId>(vocab.num_relations());
  auto augment = [n_r](const std::vector<Triple>& split) {
    std::vector<Triple> out;
    out.reserve(2 * split.size());
    out.insert(out.end(), split.begin(), split.end());
    for (const auto& t : split) {
      if (t.r >= n_r) throw DataError("relation id " + std::to_string(t.r) + " is not raw");
      out.push_back({t.o, t.r + n_r, t.s});
    }
    return out;
  };
  TripleStore out;
  out.train = augment(ts.train);
  out.valid = augment(ts.valid);
  out.test = augment(ts.test);
  out.augmented = true;
  return out;
}

void FilterIndex::insert(const Triple& t) { map_[key(t.s, t.r)].push_back(t.o); }

void FilterIndex::finalize() {
  for (auto& [k, objects] : map_) {
    std::sort(objects.begin(), objects.end());
    objects.erase(std::unique(objects.begin(), objects.end()), objects.end());
  }
}

const std::vector<EntityId>& FilterIndex::objects(EntityId s, RelationId r) const {
  static const std::vector<EntityId> kEmpty;
  auto it = map_.find(key(s, r));
  return it == map_.end() ? kEmpty : it->second;
}

bool FilterIndex::contains(const Triple& t) const {
  const auto& objs = objects(t.s, t.r);
  return std::binary_search(objs.begin(), objs.end(), t.o);
}

FilterIndex build_filter_index(const TripleStore& ts) {
  if (!ts.augmented) throw std::logic_error("filter index expects an augmented triple store");
  FilterIndex index;
  for (const auto* split : {&ts.train, &ts.valid, &ts.test}) {
    for (const auto& t : *split) index.insert(t);
  }
  index.finalize();
  return index;
}

TrainingPairs collect_training_pairs(const TripleStore& ts, std::size_t n_e) {
  if (!ts.augmented) throw std::logic_error("1-N batches expect an augmented triple store");
  std::vector<Triple> sorted = ts.train;
  std::sort(sorted.begin(), sorted.end());
  TrainingPairs out;
  out.num_entities = n_e;
  for (const auto& t : sorted) {
    if (t.o >= n_e || t.s >= n_e) throw IndexError("entity id out of range in training split");
    const QueryPair pair{t.s, t.r};
    if (out.pairs.empty() || out.pairs.back() != pair) {
      out.pairs.push_back(pair);
      out.targets.emplace_back();
    }
    if (out.targets.back().empty() || out.targets.back().back() != t.o) {
      out.targets.back().push_back(t.o);
    }
  }
  return out;
}

DenseMatrix Batch::label_matrix(std::size_t n_e) const {
  DenseMatrix y(pairs.size(), n_e);
  for (std::size_t b = 0; b < targets.size(); ++b)
    for (EntityId o : targets[b]) y(b, o) = 1.0;
  return y;
}

std::vector<Batch> make_1n_batches(const TrainingPairs& pairs, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  std::vector<std::size_t> order(pairs.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch batch;
    const std::size_t end = std::min(order.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) {
      batch.pairs.push_back(pairs.pairs[order[i]]);
      batch.targets.push_back(pairs.targets[order[i]]);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<Batch> make_1n_batches(const TripleStore& ts, std::size_t n_e,
                                   std::size_t batch_size, Rng& rng) {
  return make_1n_batches(collect_training_pairs(ts, n_e), batch_size, rng);
}

Dataset generate_synthetic(std::size_t n_e, std::uint64_t seed) {
  if (n_e < 20) throw std::invalid_argument("synthetic world needs at least 20 entities");
  Rng rng(seed);
  enum : RelationId { kSym, kOrder, kFirst, kSecond, kComposed, kNumRelations };
  const std::string_view relation_names[kNumRelations] = {
      kSynthSymmetric, kSynthOrder, kSynthFirstMap, kSynthSecondMap, kSynthComposed};

  std::vector<Triple> facts;
  // Sparse random undirected graph, expected degree 4.
  std::bernoulli_distribution edge(std::min(1.0, 4.0 / static_cast<double>(n_e - 1)));
  for (EntityId a = 0; a < n_e; ++a) {
    for (EntityId b = a + 1; b < n_e; ++b) {
      if (edge(rng)) {
        facts.push_back({a, kSym, b});
        facts.push_back({b, kSym, a});
      }
    }
  }
  // Strict total order over a hidden chain of 30% of the entities. Ordering
  // all of them would make the relation ~95% of the world.
  std::vector<EntityId> chain(n_e);
  std::iota(chain.begin(), chain.end(), 0);
  std::shuffle(chain.begin(), chain.end(), rng);
  chain.resize(n_e * 3 / 10);
  for (std::size_t i = 0; i < chain.size(); ++i)
    for (std::size_t j = i + 1; j < chain.size(); ++j)
      facts.push_back({chain[i], kOrder, chain[j]});

  std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(n_e - 1));
  std::vector<EntityId> first(n_e), second(n_e);
  for (auto& v : first) v = pick(rng);
  for (auto& v : second) v = pick(rng);
  for (EntityId a = 0; a < n_e; ++a) {
    facts.push_back({a, kFirst, first[a]});
    facts.push_back({a, kSecond, second[a]});
    facts.push_back({a, kComposed, second[first[a]]});
  }
  std::sort(facts.begin(), facts.end());
  facts.erase(std::unique(facts.begin(), facts.end()), facts.end());
  std::shuffle(facts.begin(), facts.end(), rng);

  const std::size_t n_train = facts.size() * 8 / 10;
  const std::size_t n_valid = facts.size() / 10;
  std::vector<Triple> train(facts.begin(), facts.begin() + n_train);
  std::vector<Triple> valid(facts.begin() + n_train, facts.begin() + n_train + n_valid);
  std::vector<Triple> test(facts.begin() + n_train + n_valid, facts.end());

  std::vector<bool> entity_seen(n_e, false);
  std::vector<bool> relation_seen(kNumRelations, false);
  auto mark = [&](const Triple& t) {
    entity_seen[t.s] = entity_seen[t.o] = true;
    relation_seen[t.r] = true;
  };
  for (const auto& t : train) mark(t);
  auto pull_uncovered = [&](std::vector<Triple>& split) {
    std::vector<Triple> kept;
    for (const auto& t : split) {
      if (!entity_seen[t.s] || !entity_seen[t.o] || !relation_seen[t.r]) {
        train.push_back(t);
        mark(t);
      } else {
        kept.push_back(t);
      }
    }
    split = std::move(kept);
  };
  pull_uncovered(valid);
  pull_uncovered(test);

  // Relabel by first appearance so a TSV round trip reproduces the ids.
  Dataset data;
  auto relabel = [&](std::vector<Triple>& split) {
    for (auto& t : split) {
      t.s = data.vocab.add_entity("e" + std::to_string(t.s));
      t.r = data.vocab.add_relation(relation_names[t.r]);
      t.o = data.vocab.add_entity("e" + std::to_string(t.o));
    }
  };
  relabel(train);
  relabel(valid);
  relabel(test);
  data.store.train = std::move(train);
  data.store.valid = std::move(valid);
  data.store.test = std::move(test);
  return data;
}

}  // namespace tucker
