#include "gbstring/tensor.hpp"

#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gbs {

std::string describe(const std::vector<IndexSlot>& slots) {
  std::ostringstream os;
  os << '(';
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (s) os << ',';
    switch (slots[s].kind) {
      case Slot::ws_lower: os << "ws_"; break;
      case Slot::ws_upper: os << "ws^"; break;
      case Slot::normal: os << "n"; break;
      case Slot::spacetime: os << "st"; break;
    }
    os << slots[s].dim;
  }
  os << ')';
  return os.str();
}

namespace {

struct LetterInfo {
  int dim = 0;
  Slot kind = Slot::normal;
  int uppers = 0;
  int lowers = 0;
  int occurrences = 0;
};

}  // namespace

Field einsum(std::string_view expr, std::span<const Field* const> operands) {
  const auto arrow = expr.find("->");
  if (arrow == std::string_view::npos) {
    throw std::logic_error("einsum: missing '->' in " + std::string(expr));
  }
  const std::string_view lhs = expr.substr(0, arrow);
  const std::string_view out_letters = expr.substr(arrow + 2);

  std::vector<std::string_view> terms;
  std::size_t start = 0;
  for (std::size_t p = 0; p <= lhs.size(); ++p) {
    if (p == lhs.size() || lhs[p] == ',') {
      terms.push_back(lhs.substr(start, p - start));
      start = p + 1;
    }
  }
  if (terms.size() != operands.size()) {
    throw std::logic_error("einsum: operand count mismatch in " +
                           std::string(expr));
  }

  std::map<char, LetterInfo> letters;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const Field& f = *operands[t];
    if (static_cast<int>(terms[t].size()) != f.rank()) {
      throw std::logic_error("einsum: term '" + std::string(terms[t]) +
                             "' does not match rank of operand " +
                             describe(f.slots()));
    }
    if (!(f.grid() == operands[0]->grid())) {
      throw GridError("einsum: operands live on different grids");
    }
    for (int s = 0; s < f.rank(); ++s) {
      const char c = terms[t][static_cast<std::size_t>(s)];
      const IndexSlot slot = f.slots()[static_cast<std::size_t>(s)];
      auto& info = letters[c];
      if (info.occurrences == 0) {
        info.dim = slot.dim;
        info.kind = slot.kind;
      } else if (info.dim != slot.dim) {
        throw std::logic_error(std::string("einsum: inconsistent dimension for '") +
                               c + "' in " + std::string(expr));
      }
      ++info.occurrences;
      if (slot.kind == Slot::ws_upper) ++info.uppers;
      if (slot.kind == Slot::ws_lower) ++info.lowers;
    }
  }

  std::vector<IndexSlot> out_slots;
  for (char c : out_letters) {
    auto it = letters.find(c);
    if (it == letters.end()) {
      throw std::logic_error(std::string("einsum: output letter '") + c +
                             "' not present in inputs");
    }
    out_slots.push_back({it->second.kind, it->second.dim});
  }
  std::vector<char> summed;
  for (const auto& [c, info] : letters) {
    if (out_letters.find(c) != std::string_view::npos) continue;
    const bool worldsheet = info.uppers + info.lowers > 0;
    if (worldsheet && (info.uppers != 1 || info.lowers != 1)) {
      throw std::logic_error(std::string("einsum: worldsheet letter '") + c +
                             "' must be contracted upper-with-lower in " +
                             std::string(expr));
    }
    summed.push_back(c);
  }

  // Odometer over every letter; position of each letter in `values`.
  std::vector<char> order(out_letters.begin(), out_letters.end());
  order.insert(order.end(), summed.begin(), summed.end());
  std::map<char, int> pos;
  for (std::size_t p = 0; p < order.size(); ++p) pos[order[p]] = static_cast<int>(p);

  std::vector<std::vector<int>> term_pos(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    for (char c : terms[t]) term_pos[t].push_back(pos[c]);
  }
  std::vector<int> out_pos;
  for (char c : out_letters) out_pos.push_back(pos[c]);

  Field out(operands[0]->grid_ptr(), out_slots);
  std::vector<int> values(order.size(), 0);
  std::vector<int> idx;
  Eigen::ArrayXXd prod;
  while (true) {
    for (std::size_t t = 0; t < terms.size(); ++t) {
      idx.clear();
      for (int p : term_pos[t]) idx.push_back(values[static_cast<std::size_t>(p)]);
      const auto& comp = (*operands[t])[operands[t]->flat_index(idx)];
      if (t == 0) {
        prod = comp;
      } else {
        prod *= comp;
      }
    }
    idx.clear();
    for (int p : out_pos) idx.push_back(values[static_cast<std::size_t>(p)]);
    out[out.flat_index(idx)] += prod;

    std::size_t p = order.size();
    while (p > 0) {
      --p;
      if (++values[p] < letters[order[p]].dim) break;
      values[p] = 0;
      if (p == 0) return out;
    }
    if (order.empty()) return out;
  }
}

Field permute(const Field& f, std::span<const int> perm) {
  if (static_cast<int>(perm.size()) != f.rank()) {
    throw std::logic_error("permute: permutation length mismatch");
  }
  std::vector<IndexSlot> slots;
  for (int p : perm) slots.push_back(f.slots()[static_cast<std::size_t>(p)]);
  Field out(f.grid_ptr(), slots);
  std::vector<int> src(perm.size());
  for (int c = 0; c < out.size(); ++c) {
    const auto dst = out.unflatten(c);
    for (std::size_t k = 0; k < perm.size(); ++k) {
      src[static_cast<std::size_t>(perm[k])] = dst[k];
    }
    out[c] = f[f.flat_index(src)];
  }
  return out;
}

namespace {
Field swap_slots(const Field& f, int a, int b) {
  std::vector<int> perm(static_cast<std::size_t>(f.rank()));
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
  return permute(f, perm);
}
}  // namespace

Field symmetrize(const Field& f, int slot_a, int slot_b) {
  Field out = f + swap_slots(f, slot_a, slot_b);
  out *= 0.5;
  return out;
}

Field antisymmetrize(const Field& f, int slot_a, int slot_b) {
  Field out = f - swap_slots(f, slot_a, slot_b);
  out *= 0.5;
  return out;
}

Field times(const Field& f, const Field& scalar) {
  if (scalar.rank() != 0) throw std::logic_error("times: expected scalar field");
  Field out = f;
  out *= scalar[0];
  return out;
}

Field restrict_to(const Field& f, const Mask& mask) {
  Field out = f;
  for (int c = 0; c < out.size(); ++c) {
    out[c] = mask.active().select(out[c], 0.0);
  }
  return out;
}

double max_abs(const Field& f, const Mask& mask) {
  return f.max_abs(mask.active());
}

Eigen::ArrayXXd safe_reciprocal(const Eigen::ArrayXXd& a) {
  return (a == 0.0).select(Eigen::ArrayXXd::Zero(a.rows(), a.cols()), a.inverse());
}

}  // namespace gbs
