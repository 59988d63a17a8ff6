#include "provq/circuit_store.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <variant>

#include "provq/errors.hpp"

namespace provq {

const Uuid CircuitStore::kNamespace = Uuid{};

namespace {

constexpr char kMagic[4] = {'P', 'V', 'C', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint64_t kHeaderSize = 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 24));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

bool gate_kind_valid(std::uint8_t k) { return k <= std::uint8_t(GateKind::Aggregate); }

// Structural arity rules; violations in a scanned file mean corruption.
bool children_valid(GateKind kind, std::size_t n) {
  switch (kind) {
    case GateKind::Input:
    case GateKind::Zero:
    case GateKind::One:
    case GateKind::Value:
      return n == 0;
    case GateKind::Monus:
    case GateKind::Semimodule:
      return n == 2;
    case GateKind::Delta:
      return n == 1;
    case GateKind::Plus:
    case GateKind::Times:
      return n >= 1;
    case GateKind::Aggregate:
      return true;
  }
  return false;
}

}  // namespace

const char* gate_kind_name(GateKind kind) {
  switch (kind) {
    case GateKind::Input: return "input";
    case GateKind::Zero: return "zero";
    case GateKind::One: return "one";
    case GateKind::Plus: return "plus";
    case GateKind::Times: return "times";
    case GateKind::Monus: return "monus";
    case GateKind::Delta: return "delta";
    case GateKind::Value: return "value";
    case GateKind::Semimodule: return "semimodule";
    case GateKind::Aggregate: return "aggregate";
  }
  return "?";
}

std::vector<std::uint8_t> encode_value_payload(const Value& v) {
  std::vector<std::uint8_t> out;
  switch (v.tag()) {
    case ValueTag::Int: {
      out.push_back(0);
      put_u64(out, std::uint64_t(v.as_int()));
      break;
    }
    case ValueTag::Real: {
      out.push_back(1);
      std::uint64_t bits;
      double d = v.as_real();
      std::memcpy(&bits, &d, 8);
      put_u64(out, bits);
      break;
    }
    case ValueTag::Text: {
      out.push_back(2);
      out.insert(out.end(), v.as_text().begin(), v.as_text().end());
      break;
    }
    case ValueTag::Bool: {
      out.push_back(3);
      out.push_back(v.as_bool() ? 1 : 0);
      break;
    }
    case ValueTag::Date: {
      out.push_back(4);
      out.insert(out.end(), v.as_date().begin(), v.as_date().end());
      break;
    }
    default:
      raise(Errc::DomainMismatch, "annotation values have no gate payload encoding");
  }
  return out;
}

Value decode_value_payload(const std::vector<std::uint8_t>& payload) {
  if (payload.empty()) raise(Errc::CorruptHeader, "empty value payload");
  switch (payload[0]) {
    case 0: {
      if (payload.size() != 9) raise(Errc::CorruptHeader, "bad int payload");
      return Value::integer(std::int64_t(get_u64(payload.data() + 1)));
    }
    case 1: {
      if (payload.size() != 9) raise(Errc::CorruptHeader, "bad real payload");
      std::uint64_t bits = get_u64(payload.data() + 1);
      double d;
      std::memcpy(&d, &bits, 8);
      return Value::real(d);
    }
    case 2:
      return Value::text(std::string(payload.begin() + 1, payload.end()));
    case 3: {
      if (payload.size() != 2) raise(Errc::CorruptHeader, "bad bool payload");
      return Value::boolean(payload[1] != 0);
    }
    case 4:
      return Value::date(std::string(payload.begin() + 1, payload.end()));
    default:
      raise(Errc::CorruptHeader, "unknown value payload tag");
  }
}

// ---------------------------------------------------------------------------
// Store lifecycle
// ---------------------------------------------------------------------------

CircuitStore::CircuitStore(std::string path, std::optional<std::uint64_t> seed)
    : path_(std::move(path)) {
  if (seed) {
    rng_.seed(*seed);
  } else {
    std::random_device rd;
    rng_.seed((std::uint64_t(rd()) << 32) ^ rd());
  }
  open_and_scan();
}

CircuitStore::~CircuitStore() {
  if (file_) {
    std::fflush(file_);
    std::fclose(file_);
  }
}

void CircuitStore::open_and_scan() {
  bool exists = std::filesystem::exists(path_);
  file_ = std::fopen(path_.c_str(), exists ? "r+b" : "w+b");
  if (!file_) raise(Errc::IoError, "cannot open circuit file '" + path_ + "'");

  if (!exists) {
    std::fwrite(kMagic, 1, 4, file_);
    std::uint8_t ver[4] = {std::uint8_t(kFormatVersion), 0, 0, 0};
    std::fwrite(ver, 1, 4, file_);
    std::fflush(file_);
    end_offset_ = kHeaderSize;
    return;
  }

  char magic[4];
  std::uint8_t ver[4];
  if (std::fread(magic, 1, 4, file_) != 4 || std::memcmp(magic, kMagic, 4) != 0 ||
      std::fread(ver, 1, 4, file_) != 4 || ver[0] != kFormatVersion || ver[1] || ver[2] || ver[3]) {
    std::fclose(file_);
    file_ = nullptr;
    raise(Errc::CorruptHeader, "'" + path_ + "' is not a circuit file");
  }

  std::uint64_t file_size = std::filesystem::file_size(path_);
  std::uint64_t offset = kHeaderSize;
  while (offset < file_size) {
    // Parse one record; stop at the first structurally incomplete one.
    if (file_size - offset < 16 + 1 + 4) break;
    std::fseek(file_, long(offset), SEEK_SET);
    Uuid id;
    std::uint8_t kind_byte;
    std::uint8_t count_bytes[4];
    if (std::fread(id.bytes.data(), 1, 16, file_) != 16) break;
    if (std::fread(&kind_byte, 1, 1, file_) != 1) break;
    if (std::fread(count_bytes, 1, 4, file_) != 4) break;
    if (!gate_kind_valid(kind_byte)) break;
    std::uint32_t child_count = std::uint32_t(count_bytes[0]) | (std::uint32_t(count_bytes[1]) << 8) |
                                (std::uint32_t(count_bytes[2]) << 16) |
                                (std::uint32_t(count_bytes[3]) << 24);
    GateKind kind = GateKind(kind_byte);
    if (!children_valid(kind, child_count)) break;
    std::uint64_t body = offset + 16 + 1 + 4;
    if (file_size - body < std::uint64_t(child_count) * 16 + 4) break;
    std::fseek(file_, long(body + std::uint64_t(child_count) * 16), SEEK_SET);
    std::uint8_t len_bytes[4];
    if (std::fread(len_bytes, 1, 4, file_) != 4) break;
    std::uint32_t payload_len = std::uint32_t(len_bytes[0]) | (std::uint32_t(len_bytes[1]) << 8) |
                                (std::uint32_t(len_bytes[2]) << 16) |
                                (std::uint32_t(len_bytes[3]) << 24);
    std::uint64_t record_end = body + std::uint64_t(child_count) * 16 + 4 + payload_len;
    if (record_end > file_size) break;
    index_.emplace(id, offset);
    ++kind_counts_[kind];
    offset = record_end;
  }

  if (offset < file_size) {
    truncated_bytes_ = file_size - offset;
    std::fprintf(stderr, "warning: %s: dropping %llu bytes of torn trailing record\n",
                 path_.c_str(), static_cast<unsigned long long>(truncated_bytes_));
    std::filesystem::resize_file(path_, offset);
    std::fclose(file_);
    file_ = std::fopen(path_.c_str(), "r+b");
    if (!file_) raise(Errc::IoError, "cannot reopen circuit file '" + path_ + "'");
  }
  end_offset_ = offset;
}

void CircuitStore::append_record(const GateRecord& rec) {
  std::vector<std::uint8_t> buf;
  buf.reserve(16 + 1 + 4 + rec.children.size() * 16 + 4 + rec.payload.size());
  buf.insert(buf.end(), rec.id.bytes.begin(), rec.id.bytes.end());
  buf.push_back(std::uint8_t(rec.kind));
  put_u32(buf, std::uint32_t(rec.children.size()));
  for (const Uuid& c : rec.children) buf.insert(buf.end(), c.bytes.begin(), c.bytes.end());
  put_u32(buf, std::uint32_t(rec.payload.size()));
  buf.insert(buf.end(), rec.payload.begin(), rec.payload.end());

  std::fseek(file_, long(end_offset_), SEEK_SET);
  if (std::fwrite(buf.data(), 1, buf.size(), file_) != buf.size()) {
    raise(Errc::IoError, "short write to circuit file");
  }
  index_.emplace(rec.id, end_offset_);
  ++kind_counts_[rec.kind];
  end_offset_ += buf.size();
}

GateRecord CircuitStore::read_record_at(std::uint64_t offset) const {
  std::fseek(file_, long(offset), SEEK_SET);
  GateRecord rec;
  std::uint8_t kind_byte;
  std::uint8_t u32buf[4];
  if (std::fread(rec.id.bytes.data(), 1, 16, file_) != 16 ||
      std::fread(&kind_byte, 1, 1, file_) != 1 || std::fread(u32buf, 1, 4, file_) != 4) {
    raise(Errc::IoError, "short read from circuit file");
  }
  rec.kind = GateKind(kind_byte);
  std::uint32_t child_count = std::uint32_t(u32buf[0]) | (std::uint32_t(u32buf[1]) << 8) |
                              (std::uint32_t(u32buf[2]) << 16) | (std::uint32_t(u32buf[3]) << 24);
  rec.children.resize(child_count);
  for (auto& c : rec.children) {
    if (std::fread(c.bytes.data(), 1, 16, file_) != 16) {
      raise(Errc::IoError, "short read from circuit file");
    }
  }
  if (std::fread(u32buf, 1, 4, file_) != 4) raise(Errc::IoError, "short read from circuit file");
  std::uint32_t payload_len = std::uint32_t(u32buf[0]) | (std::uint32_t(u32buf[1]) << 8) |
                              (std::uint32_t(u32buf[2]) << 16) | (std::uint32_t(u32buf[3]) << 24);
  rec.payload.resize(payload_len);
  if (payload_len > 0 && std::fread(rec.payload.data(), 1, payload_len, file_) != payload_len) {
    raise(Errc::IoError, "short read from circuit file");
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Gate creation and lookup
// ---------------------------------------------------------------------------

Uuid CircuitStore::create_input() {
  std::lock_guard<std::mutex> lock(mutex_);
  Uuid id = uuid_v4(rng_);
  if (index_.count(id)) {
    raise(Errc::IdCollision, "random input id collided with an existing gate: " + id.to_string());
  }
  append_record(GateRecord{id, GateKind::Input, {}, {}});
  return id;
}

Uuid CircuitStore::add_input(const Uuid& id) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (id.version() != 4 || !id.rfc_variant()) {
    raise(Errc::IdCollision, "input gates require v4 ids: " + id.to_string());
  }
  auto it = index_.find(id);
  if (it != index_.end()) {
    if (read_record_at(it->second).kind != GateKind::Input) {
      raise(Errc::IdCollision, "id already names a derived gate: " + id.to_string());
    }
    return id;
  }
  append_record(GateRecord{id, GateKind::Input, {}, {}});
  return id;
}

Uuid CircuitStore::derive(GateKind kind, std::vector<Uuid> children,
                          std::vector<std::uint8_t> payload, bool commutative) {
  if (kind == GateKind::Input) {
    raise(Errc::DomainMismatch, "input gates are not derived");
  }
  if (!children_valid(kind, children.size())) {
    raise(Errc::DomainMismatch, std::string("bad child count for ") + gate_kind_name(kind));
  }
  if (kind == GateKind::Plus || (kind == GateKind::Times && commutative)) {
    std::sort(children.begin(), children.end());
  }

  std::lock_guard<std::mutex> lock(mutex_);
  for (const Uuid& c : children) {
    if (!index_.count(c)) {
      raise(Errc::UnknownChild, "child gate not in store: " + c.to_string());
    }
  }

  std::vector<std::uint8_t> name;
  name.reserve(1 + 4 + children.size() * 16 + payload.size());
  name.push_back(std::uint8_t(kind));
  put_u32(name, std::uint32_t(children.size()));
  for (const Uuid& c : children) name.insert(name.end(), c.bytes.begin(), c.bytes.end());
  name.insert(name.end(), payload.begin(), payload.end());
  Uuid id = uuid_v5(kNamespace, name);

  if (!index_.count(id)) {
    append_record(GateRecord{id, kind, std::move(children), std::move(payload)});
  }
  return id;
}

bool CircuitStore::contains(const Uuid& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return index_.count(id) != 0;
}

GateRecord CircuitStore::get(const Uuid& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end()) {
    raise(Errc::NotFound, "no gate with id " + id.to_string());
  }
  return read_record_at(it->second);
}

std::size_t CircuitStore::gate_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return index_.size();
}

std::map<GateKind, std::size_t> CircuitStore::kind_counts() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return kind_counts_;
}

void CircuitStore::flush() {
  std::lock_guard<std::mutex> lock(mutex_);
  std::fflush(file_);
}

// ---------------------------------------------------------------------------
// Traversal and specialization
// ---------------------------------------------------------------------------

std::vector<Uuid> CircuitStore::reachable(const Uuid& root) const {
  std::vector<Uuid> order;
  std::unordered_map<Uuid, bool, UuidHash> seen;
  std::vector<Uuid> stack{root};
  while (!stack.empty()) {
    Uuid id = stack.back();
    stack.pop_back();
    if (seen[id]) continue;
    seen[id] = true;
    order.push_back(id);
    for (const Uuid& c : get(id).children) {
      if (!seen[c]) stack.push_back(c);
    }
  }
  return order;
}

std::vector<Uuid> CircuitStore::reachable_inputs(const Uuid& root) const {
  std::vector<Uuid> out;
  for (const Uuid& id : reachable(root)) {
    if (get(id).kind == GateKind::Input) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// A gate's specialization is an annotation element, a scalar (value gates),
// a tensor pair (semimodule gates), or an aggregate result.
using SpecResult =
    std::variant<Element, Value, std::pair<Value, Element>, SemimodulePtr>;

SpecResult specialize_gate(const GateRecord& rec, const AnnotationStructure& s,
                           const std::map<Uuid, Element>& leaf_map,
                           const std::unordered_map<Uuid, SpecResult, UuidHash>& memo) {
  auto element_of = [&](const Uuid& id) -> const Element& {
    const SpecResult& r = memo.at(id);
    if (const auto* e = std::get_if<Element>(&r)) return *e;
    raise(Errc::DomainMismatch, "gate child is not an annotation element");
  };

  switch (rec.kind) {
    case GateKind::Input: {
      auto it = leaf_map.find(rec.id);
      if (it == leaf_map.end()) {
        raise(Errc::UnmappedLeaf, "no mapping for input gate " + rec.id.to_string());
      }
      s.check_domain(it->second);
      return it->second;
    }
    case GateKind::Zero:
      return s.zero();
    case GateKind::One:
      return s.one();
    case GateKind::Plus: {
      std::vector<Element> items;
      items.reserve(rec.children.size());
      for (const Uuid& c : rec.children) items.push_back(element_of(c));
      return s.plus_fold(items);
    }
    case GateKind::Times: {
      std::vector<Element> items;
      items.reserve(rec.children.size());
      for (const Uuid& c : rec.children) items.push_back(element_of(c));
      return s.times_fold(items);
    }
    case GateKind::Monus: {
      if (!s.has_monus()) {
        raise(Errc::NeedsMonus, "structure '" + s.name() + "' cannot specialize monus gates");
      }
      return s.monus(element_of(rec.children[0]), element_of(rec.children[1]));
    }
    case GateKind::Delta: {
      if (!s.has_delta()) {
        raise(Errc::NeedsDelta, "structure '" + s.name() + "' cannot specialize delta gates");
      }
      return s.delta(element_of(rec.children[0]));
    }
    case GateKind::Value:
      return decode_value_payload(rec.payload);
    case GateKind::Semimodule: {
      const SpecResult& v = memo.at(rec.children[0]);
      const auto* value = std::get_if<Value>(&v);
      if (!value) raise(Errc::DomainMismatch, "semimodule gate needs a value child first");
      return std::make_pair(*value, element_of(rec.children[1]));
    }
    case GateKind::Aggregate: {
      std::string fn(rec.payload.begin(), rec.payload.end());
      MonoidAggregate f{agg_fn_from_name(fn)};
      std::vector<std::pair<Value, Element>> pairs;
      pairs.reserve(rec.children.size());
      for (const Uuid& c : rec.children) {
        const SpecResult& r = memo.at(c);
        const auto* pair = std::get_if<std::pair<Value, Element>>(&r);
        if (!pair) raise(Errc::DomainMismatch, "aggregate gate children must be semimodule gates");
        pairs.push_back(*pair);
      }
      return sm_aggregate(f, std::move(pairs), s);
    }
  }
  raise(Errc::DomainMismatch, "bad gate kind");
}

}  // namespace

SemimodulePtr CircuitStore::specialize_value(const Uuid& root, const AnnotationStructure& s,
                                             const std::map<Uuid, Element>& leaf_map) const {
  // Iterative post-order with memoization over the DAG.
  std::unordered_map<Uuid, SpecResult, UuidHash> memo;
  std::vector<std::pair<Uuid, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    if (memo.count(id)) continue;
    GateRecord rec = get(id);
    if (!expanded) {
      stack.emplace_back(id, true);
      for (const Uuid& c : rec.children) {
        if (!memo.count(c)) stack.emplace_back(c, false);
      }
    } else {
      memo.emplace(id, specialize_gate(rec, s, leaf_map, memo));
    }
  }
  const SpecResult& r = memo.at(root);
  if (const auto* agg = std::get_if<SemimodulePtr>(&r)) return *agg;
  if (const auto* v = std::get_if<Value>(&r)) return SemimoduleValue::resolved(*v);
  if (const auto* p = std::get_if<std::pair<Value, Element>>(&r)) {
    return SemimoduleValue::symbolic({*p});
  }
  raise(Errc::SemimoduleUnresolved, "root gate resolves to an annotation element");
}

Element CircuitStore::specialize(const Uuid& root, const AnnotationStructure& s,
                                 const std::map<Uuid, Element>& leaf_map) const {
  std::unordered_map<Uuid, SpecResult, UuidHash> memo;
  std::vector<std::pair<Uuid, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [id, expanded] = stack.back();
    stack.pop_back();
    if (memo.count(id)) continue;
    GateRecord rec = get(id);
    if (!expanded) {
      stack.emplace_back(id, true);
      for (const Uuid& c : rec.children) {
        if (!memo.count(c)) stack.emplace_back(c, false);
      }
    } else {
      memo.emplace(id, specialize_gate(rec, s, leaf_map, memo));
    }
  }
  const SpecResult& r = memo.at(root);
  if (const auto* e = std::get_if<Element>(&r)) return *e;
  raise(Errc::SemimoduleUnresolved,
        "root gate is an aggregate construction; use specialize_value");
}

std::string CircuitStore::export_dot(const Uuid& root) const {
  std::string out = "digraph circuit {\n  rankdir=BT;\n";
  for (const Uuid& id : reachable(root)) {
    GateRecord rec = get(id);
    std::string label = gate_kind_name(rec.kind);
    if (rec.kind == GateKind::Input) {
      label = "input\\n" + id.to_string().substr(0, 8);
    } else if (rec.kind == GateKind::Value) {
      label = "value\\n" + decode_value_payload(rec.payload).to_string();
    } else if (rec.kind == GateKind::Aggregate) {
      label = "agg:" + std::string(rec.payload.begin(), rec.payload.end());
    }
    out += "  \"" + id.to_string() + "\" [label=\"" + label + "\"];\n";
    for (const Uuid& c : rec.children) {
      out += "  \"" + c.to_string() + "\" -> \"" + id.to_string() + "\";\n";
    }
  }
  out += "}\n";
  return out;
}

// ---------------------------------------------------------------------------
// StoreStructure
// ---------------------------------------------------------------------------

void StoreStructure::check_domain(const Element& a) const {
  if (!a.is_gate()) raise(Errc::DomainMismatch, "expected a gate element");
}

Element StoreStructure::zero() const {
  return Element::gate(store_.derive(GateKind::Zero, {}));
}

Element StoreStructure::one() const {
  return Element::gate(store_.derive(GateKind::One, {}));
}

Element StoreStructure::plus(const Element& a, const Element& b) const {
  check_domain(a);
  check_domain(b);
  return Element::gate(store_.derive(GateKind::Plus, {a.as_gate().id, b.as_gate().id}));
}

Element StoreStructure::times(const Element& a, const Element& b) const {
  check_domain(a);
  check_domain(b);
  return Element::gate(store_.derive(GateKind::Times, {a.as_gate().id, b.as_gate().id}, {},
                                     times_commutative()));
}

Element StoreStructure::monus(const Element& a, const Element& b) const {
  check_domain(a);
  check_domain(b);
  return Element::gate(store_.derive(GateKind::Monus, {a.as_gate().id, b.as_gate().id}));
}

Element StoreStructure::delta(const Element& a) const {
  check_domain(a);
  return Element::gate(store_.derive(GateKind::Delta, {a.as_gate().id}));
}

bool StoreStructure::is_zero(const Element& a) const {
  check_domain(a);
  return store_.get(a.as_gate().id).kind == GateKind::Zero;
}

Element StoreStructure::plus_fold(std::span<const Element> items) const {
  if (items.empty()) return zero();
  if (items.size() == 1) return items[0];
  std::vector<Uuid> children;
  children.reserve(items.size());
  for (const Element& e : items) {
    check_domain(e);
    children.push_back(e.as_gate().id);
  }
  return Element::gate(store_.derive(GateKind::Plus, std::move(children)));
}

Element StoreStructure::times_fold(std::span<const Element> items) const {
  if (items.empty()) return one();
  if (items.size() == 1) return items[0];
  std::vector<Uuid> children;
  children.reserve(items.size());
  for (const Element& e : items) {
    check_domain(e);
    children.push_back(e.as_gate().id);
  }
  return Element::gate(
      store_.derive(GateKind::Times, std::move(children), {}, times_commutative()));
}

SemimodulePtr StoreStructure::lift_aggregate(
    const MonoidAggregate& f, std::span<const std::pair<Value, Element>> items) const {
  std::vector<Uuid> children;
  children.reserve(items.size());
  for (const auto& [v, ann] : items) {
    check_domain(ann);
    Uuid value_gate = store_.derive(GateKind::Value, {}, encode_value_payload(v));
    children.push_back(
        store_.derive(GateKind::Semimodule, {value_gate, ann.as_gate().id}, {}, false));
  }
  std::string fn = agg_fn_name(f.fn);
  std::vector<std::uint8_t> payload(fn.begin(), fn.end());
  return SemimoduleValue::gate(
      store_.derive(GateKind::Aggregate, std::move(children), std::move(payload), false));
}

}  // namespace provq
