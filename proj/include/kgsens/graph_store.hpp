#pragma once
// Triple-structured knowledge graphs with train/valid/test splits.
//
// Entities and relations are dictionary-encoded to dense ids in order of
// first appearance across train -> valid -> test. Files follow the usual
// link-prediction convention: one `subject\trelation\tobject` per line.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgsens {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
    EntityId subject = 0;
    RelationId predicate = 0;
    EntityId object = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
};

enum class Split { train, valid, test };

// Bidirectional name <-> dense id map.
class Dictionary {
public:
    std::uint32_t get_or_add(std::string_view name);
    // Returns size() when absent.
    std::uint32_t find(std::string_view name) const;
    const std::string& name(std::uint32_t id) const { return names_.at(id); }
    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    // Validates ids and per-split uniqueness; throws DataError otherwise.
    KnowledgeGraph(std::vector<std::string> entity_names, std::vector<std::string> relation_names,
                   std::vector<Triple> train, std::vector<Triple> valid, std::vector<Triple> test);

    std::size_t entity_count() const { return entity_names_.size(); }
    std::size_t relation_count() const { return relation_names_.size(); }

    const std::vector<std::string>& entity_names() const { return entity_names_; }
    const std::vector<std::string>& relation_names() const { return relation_names_; }
    const std::string& entity_name(EntityId id) const { return entity_names_.at(id); }
    const std::string& relation_name(RelationId id) const { return relation_names_.at(id); }
    // Returns relation_count() when absent.
    RelationId find_relation(std::string_view name) const;

    const std::vector<Triple>& split(Split which) const;
    const std::vector<Triple>& train() const { return train_; }
    const std::vector<Triple>& valid() const { return valid_; }
    const std::vector<Triple>& test() const { return test_; }

    std::size_t total_edge_count() const { return train_.size() + valid_.size() + test_.size(); }

    // Triples present in more than one split (counted once per extra copy).
    std::size_t cross_split_duplicates() const;

private:
    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::vector<Triple> train_;
    std::vector<Triple> valid_;
    std::vector<Triple> test_;
};

std::uint64_t pack_triple(const Triple& t);

// Membership over train ∪ valid ∪ test, plus completion lookups used by
// filtered ranking.
class PositiveSet {
public:
    explicit PositiveSet(const KnowledgeGraph& kg);

    bool contains(const Triple& t) const { return members_.contains(pack_triple(t)); }
    std::size_t size() const { return members_.size(); }

    // Known objects for (s, p, ?) and subjects for (?, p, o).
    std::span<const EntityId> objects(EntityId s, RelationId p) const;
    std::span<const EntityId> subjects(RelationId p, EntityId o) const;

private:
    std::unordered_set<std::uint64_t> members_;
    std::unordered_map<std::uint64_t, std::vector<EntityId>> objects_;
    std::unordered_map<std::uint64_t, std::vector<EntityId>> subjects_;
};

PositiveSet all_positive_set(const KnowledgeGraph& kg);

// Reads train.txt / valid.txt / test.txt. Missing valid/test files are
// treated as empty; a missing or empty train file is a DataError. Triples
// shared between splits are allowed; `warn` receives a message for them.
KnowledgeGraph ingest(const std::filesystem::path& train_path, const std::filesystem::path& valid_path,
                      const std::filesystem::path& test_path,
                      const std::function<void(const std::string&)>& warn = {});

KnowledgeGraph ingest_directory(const std::filesystem::path& dir,
                                const std::function<void(const std::string&)>& warn = {});

// Writes train/valid/test.txt plus entity_ids.tsv and relation_ids.tsv.
void write_directory(const KnowledgeGraph& kg, const std::filesystem::path& dir);

}  // namespace kgsens
