#include "kgsens/graph_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "kgsens/error.hpp"

namespace kgsens {

namespace {

constexpr std::uint64_t kEntityBits = 24;
constexpr std::uint64_t kRelationBits = 16;

std::uint64_t key2(std::uint64_t a, std::uint64_t b) { return (a << 32) | b; }

struct RawTriple {
    std::string subject, predicate, object;
};

std::vector<RawTriple> read_split(const std::filesystem::path& path, bool required) {
    std::vector<RawTriple> rows;
    std::ifstream in(path);
    if (!in) {
        if (required) throw DataError("cannot open " + path.string());
        return rows;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            fields.emplace_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                            std::to_string(fields.size()));
        }
        rows.push_back({std::move(fields[0]), std::move(fields[1]), std::move(fields[2])});
    }
    return rows;
}

void check_unique(const std::vector<Triple>& triples, const char* name) {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(triples.size() * 2);
    for (const auto& t : triples) {
        if (!seen.insert(pack_triple(t)).second) {
            throw DataError(std::string("duplicate triple in ") + name + " split");
        }
    }
}

}  // namespace

std::uint32_t Dictionary::get_or_add(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
}

std::uint32_t Dictionary::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? static_cast<std::uint32_t>(names_.size()) : it->second;
}

std::uint64_t pack_triple(const Triple& t) {
    return (static_cast<std::uint64_t>(t.subject) << (kEntityBits + kRelationBits)) |
           (static_cast<std::uint64_t>(t.predicate) << kEntityBits) | t.object;
}

KnowledgeGraph::KnowledgeGraph(std::vector<std::string> entity_names, std::vector<std::string> relation_names,
                               std::vector<Triple> train, std::vector<Triple> valid, std::vector<Triple> test)
    : entity_names_(std::move(entity_names)),
      relation_names_(std::move(relation_names)),
      train_(std::move(train)),
      valid_(std::move(valid)),
      test_(std::move(test)) {
    if (entity_names_.size() >= (1ULL << kEntityBits)) throw DataError("too many entities");
    if (relation_names_.size() >= (1ULL << kRelationBits)) throw DataError("too many relations");
    {
        std::unordered_set<std::string> names(entity_names_.begin(), entity_names_.end());
        if (names.size() != entity_names_.size()) throw DataError("entity names are not unique");
    }
    {
        std::unordered_set<std::string> names(relation_names_.begin(), relation_names_.end());
        if (names.size() != relation_names_.size()) throw DataError("relation names are not unique");
    }
    for (const auto* split : {&train_, &valid_, &test_}) {
        for (const auto& t : *split) {
            if (t.subject >= entity_names_.size() || t.object >= entity_names_.size() ||
                t.predicate >= relation_names_.size()) {
                throw DataError("triple id out of range");
            }
        }
    }
    check_unique(train_, "train");
    check_unique(valid_, "valid");
    check_unique(test_, "test");
}

RelationId KnowledgeGraph::find_relation(std::string_view name) const {
    auto it = std::find(relation_names_.begin(), relation_names_.end(), name);
    return static_cast<RelationId>(it - relation_names_.begin());
}

const std::vector<Triple>& KnowledgeGraph::split(Split which) const {
    switch (which) {
        case Split::train: return train_;
        case Split::valid: return valid_;
        case Split::test: return test_;
    }
    return train_;
}

std::size_t KnowledgeGraph::cross_split_duplicates() const {
    std::unordered_set<std::uint64_t> seen;
    std::size_t dupes = 0;
    for (const auto* split : {&train_, &valid_, &test_}) {
        for (const auto& t : *split) {
            if (!seen.insert(pack_triple(t)).second) ++dupes;
        }
    }
    return dupes;
}

PositiveSet::PositiveSet(const KnowledgeGraph& kg) {
    members_.reserve(kg.total_edge_count() * 2);
    for (auto which : {Split::train, Split::valid, Split::test}) {
        for (const auto& t : kg.split(which)) {
            if (!members_.insert(pack_triple(t)).second) continue;
            objects_[key2(t.subject, t.predicate)].push_back(t.object);
            subjects_[key2(t.predicate, t.object)].push_back(t.subject);
        }
    }
}

std::span<const EntityId> PositiveSet::objects(EntityId s, RelationId p) const {
    auto it = objects_.find(key2(s, p));
    if (it == objects_.end()) return {};
    return it->second;
}

std::span<const EntityId> PositiveSet::subjects(RelationId p, EntityId o) const {
    auto it = subjects_.find(key2(p, o));
    if (it == subjects_.end()) return {};
    return it->second;
}

PositiveSet all_positive_set(const KnowledgeGraph& kg) { return PositiveSet(kg); }

KnowledgeGraph ingest(const std::filesystem::path& train_path, const std::filesystem::path& valid_path,
                      const std::filesystem::path& test_path, const std::function<void(const std::string&)>& warn) {
    Dictionary entities;
    Dictionary relations;
    auto encode = [&](const std::vector<RawTriple>& rows) {
        std::vector<Triple> out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            Triple t;
            t.subject = entities.get_or_add(r.subject);
            t.predicate = relations.get_or_add(r.predicate);
            t.object = entities.get_or_add(r.object);
            out.push_back(t);
        }
        return out;
    };
    auto train = encode(read_split(train_path, true));
    if (train.empty()) throw DataError("train split is empty: " + train_path.string());
    auto valid = encode(read_split(valid_path, false));
    auto test = encode(read_split(test_path, false));

    KnowledgeGraph kg(entities.names(), relations.names(), std::move(train), std::move(valid), std::move(test));
    if (auto dupes = kg.cross_split_duplicates(); dupes > 0 && warn) {
        warn(std::to_string(dupes) + " triples appear in more than one split");
    }
    return kg;
}

KnowledgeGraph ingest_directory(const std::filesystem::path& dir, const std::function<void(const std::string&)>& warn) {
    return ingest(dir / "train.txt", dir / "valid.txt", dir / "test.txt", warn);
}

void write_directory(const KnowledgeGraph& kg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write_split = [&](const std::vector<Triple>& triples, const char* file) {
        std::ofstream out(dir / file);
        if (!out) throw DataError("cannot write " + (dir / file).string());
        for (const auto& t : triples) {
            out << kg.entity_name(t.subject) << '\t' << kg.relation_name(t.predicate) << '\t'
                << kg.entity_name(t.object) << '\n';
        }
    };
    write_split(kg.train(), "train.txt");
    write_split(kg.valid(), "valid.txt");
    write_split(kg.test(), "test.txt");
    auto write_ids = [&](const std::vector<std::string>& names, const char* file) {
        std::ofstream out(dir / file);
        for (std::size_t i = 0; i < names.size(); ++i) out << i << '\t' << names[i] << '\n';
    };
    write_ids(kg.entity_names(), "entity_ids.tsv");
    write_ids(kg.relation_names(), "relation_ids.tsv");
}

}  // namespace kgsens
