#pragma once

#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "provq/semiring.hpp"
#include "provq/uuid.hpp"

namespace provq {

// Gate kinds with pinned wire values (part of the file format).
enum class GateKind : std::uint8_t {
  Input = 0,
  Zero = 1,
  One = 2,
  Plus = 3,
  Times = 4,
  Monus = 5,
  Delta = 6,
  Value = 7,
  Semimodule = 8,
  Aggregate = 9,
};

const char* gate_kind_name(GateKind kind);

struct GateRecord {
  Uuid id;
  GateKind kind;
  std::vector<Uuid> children;
  std::vector<std::uint8_t> payload;  // Value gates: scalar; Aggregate gates: function name
};

// Canonical payload encoding for value gates.
std::vector<std::uint8_t> encode_value_payload(const Value& v);
Value decode_value_payload(const std::vector<std::uint8_t>& payload);

// Append-only persistent provenance circuit.
//
// File format (little-endian): magic "PVC1", format version u32; then
// records: uuid (16 bytes), kind (u8), child count (u32), child uuids
// (16 bytes each), payload length (u32), payload bytes.
//
// Input gates carry random v4 ids; derived gates are content-addressed with
// v5 ids over a canonical description (kind byte, child count, child uuids
// with plus/times children sorted bytewise, payload bytes) under a fixed
// all-zero namespace, so independent builds agree gate for gate. Records are
// never mutated; a torn trailing record is truncated on open.
//
// Concurrency: appends are serialized through one writer; reads of already
// indexed gates may happen concurrently (guarded internally).
class CircuitStore {
 public:
  static const Uuid kNamespace;  // all zeros, frozen

  explicit CircuitStore(std::string path, std::optional<std::uint64_t> seed = std::nullopt);
  ~CircuitStore();
  CircuitStore(const CircuitStore&) = delete;
  CircuitStore& operator=(const CircuitStore&) = delete;

  const std::string& path() const { return path_; }

  // Fresh random input gate. An id collision with an existing gate is fatal.
  Uuid create_input();
  // Input gate with a caller-supplied v4 id (tokens loaded from a catalog).
  // Idempotent when the id already names an input gate.
  Uuid add_input(const Uuid& id);

  // Content-addressed derived gate; appends only if the id is new.
  // `commutative` controls child sorting for Times (Plus always sorts).
  Uuid derive(GateKind kind, std::vector<Uuid> children,
              std::vector<std::uint8_t> payload = {}, bool commutative = true);

  bool contains(const Uuid& id) const;
  GateRecord get(const Uuid& id) const;

  std::size_t gate_count() const;
  std::map<GateKind, std::size_t> kind_counts() const;

  void flush();

  // Number of torn bytes dropped when the file was opened (0 normally).
  std::uint64_t truncated_bytes_on_open() const { return truncated_bytes_; }

  // Bottom-up specialization of the subcircuit under `root` into a concrete
  // structure, mapping input gates through `leaf_map`. Each gate is
  // evaluated once; DAG sharing is respected.
  Element specialize(const Uuid& root, const AnnotationStructure& s,
                     const std::map<Uuid, Element>& leaf_map) const;
  // Same, for roots that resolve to aggregate results rather than elements.
  SemimodulePtr specialize_value(const Uuid& root, const AnnotationStructure& s,
                                 const std::map<Uuid, Element>& leaf_map) const;

  std::vector<Uuid> reachable(const Uuid& root) const;
  std::vector<Uuid> reachable_inputs(const Uuid& root) const;

  std::string export_dot(const Uuid& root) const;

  std::mt19937_64& rng() { return rng_; }

 private:
  void open_and_scan();
  void append_record(const GateRecord& rec);
  GateRecord read_record_at(std::uint64_t offset) const;

  std::string path_;
  mutable std::FILE* file_ = nullptr;
  mutable std::mutex mutex_;
  std::unordered_map<Uuid, std::uint64_t, UuidHash> index_;  // id -> file offset
  std::map<GateKind, std::size_t> kind_counts_;
  std::uint64_t end_offset_ = 0;
  std::uint64_t truncated_bytes_ = 0;
  std::mt19937_64 rng_;
};

// Annotation structure whose elements are gates of a circuit store: the
// engine's generic provenance domain. Operations append derived gates, which
// is deterministic and idempotent, so evaluation through this structure is
// reproducible gate for gate.
class StoreStructure final : public AnnotationStructure {
 public:
  explicit StoreStructure(CircuitStore& store)
      : AnnotationStructure("circuit", true, true, true), store_(store) {}

  Element zero() const override;
  Element one() const override;
  Element plus(const Element& a, const Element& b) const override;
  Element times(const Element& a, const Element& b) const override;
  Element monus(const Element& a, const Element& b) const override;
  Element delta(const Element& a) const override;
  bool is_zero(const Element& a) const override;
  Element plus_fold(std::span<const Element> items) const override;
  Element times_fold(std::span<const Element> items) const override;
  SemimodulePtr lift_aggregate(const MonoidAggregate& f,
                               std::span<const std::pair<Value, Element>> items) const override;
  void check_domain(const Element& a) const override;

  CircuitStore& store() const { return store_; }

 private:
  CircuitStore& store_;
};

}  // namespace provq
