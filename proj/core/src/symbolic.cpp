#include "carpetlab/symbolic.hpp"

#include "carpetlab/errors.hpp"

namespace carpetlab {

namespace {

struct Node {
  Rational x0, w, y0, h;
};

void check_scales(const Rational& a, const Rational& b) {
  if (!(a.sign() > 0 && a < b && b < Rational(1))) throw PreconditionError("need 0 < a < b < 1");
}

// Visits the cover in depth-first lexicographic order.
template <class Emit>
void expand_cover(const std::vector<AffineMap>& maps, const Rational& delta, std::size_t budget, Emit&& emit) {
  if (maps.empty()) throw PreconditionError("empty map list");
  if (delta.sign() <= 0) throw PreconditionError("delta must be positive");
  std::size_t produced = 0;
  std::vector<std::uint32_t> path;
  std::vector<Node> stack_nodes;
  std::vector<std::uint32_t> stack_next;
  auto leaf = [&](const Node& n) { return !(n.w > delta) && !(n.h > delta); };
  Node root{Rational(0), Rational(1), Rational(0), Rational(1)};
  if (leaf(root)) {
    emit(root, path);
    return;
  }
  stack_nodes.push_back(root);
  stack_next.push_back(0);
  while (!stack_nodes.empty()) {
    std::uint32_t& next = stack_next.back();
    if (next == maps.size()) {
      stack_nodes.pop_back();
      stack_next.pop_back();
      if (!path.empty()) path.pop_back();
      continue;
    }
    const Node& p = stack_nodes.back();
    const AffineMap& f = maps[next];
    Node child{p.x0 + p.w * f.x_offset, p.w * f.x_scale, p.y0 + p.h * f.y_offset, p.h * f.y_scale};
    std::uint32_t symbol = next++;
    path.push_back(symbol);
    if (leaf(child)) {
      if (++produced > budget) throw BudgetExceeded("cylinder cover exceeds budget of " + std::to_string(budget));
      emit(child, path);
      path.pop_back();
    } else {
      stack_nodes.push_back(std::move(child));
      stack_next.push_back(0);
    }
  }
}

}  // namespace

ScalePair ell_of_k(const Rational& a, const Rational& b, int k) {
  check_scales(a, b);
  if (k < 1) throw PreconditionError("k must be positive");
  Rational bk = b.pow(static_cast<unsigned long>(k));
  int ell = 0;
  Rational ap(1);
  while (ap * a >= bk) {
    ap *= a;
    ++ell;
  }
  return {k, ell, ap / bk};
}

CylinderFamily approx_square_family(const UniformFibreCarpet& carpet, int k, const Word& xi, bool extended) {
  auto report = validate_uniform(carpet);
  if (!report.ok()) throw PreconditionError("invalid carpet: " + report.summary());
  ScalePair sp = ell_of_k(carpet.a, carpet.b, k);
  if (sp.ell == 0) {
    throw PreconditionError("ℓ(k) = 0 for k = " + std::to_string(k) + ": no x-letters, choose a larger k");
  }
  std::size_t want = static_cast<std::size_t>(sp.ell) + (extended ? 1 : 0);
  if (xi.size() != want) {
    throw PreconditionError("ξ has length " + std::to_string(xi.size()) + ", expected " + std::to_string(want));
  }
  for (auto s : xi.symbols) {
    if (s >= carpet.m) throw PreconditionError("ξ symbol out of range");
  }
  CylinderFamily fam;
  fam.scales = sp;
  fam.xi = xi;
  // x positions over σ′ ∈ Σ_n^{|ξ|}
  std::vector<std::pair<Word, Rational>> xs{{Word{}, Rational(0)}};
  Rational scale(1);
  for (std::size_t i = 0; i < xi.size(); ++i) {
    std::vector<std::pair<Word, Rational>> next;
    for (const auto& [w, x] : xs) {
      for (std::uint32_t j = 0; j < carpet.n; ++j) {
        Word w2 = w;
        w2.symbols.push_back(j);
        next.push_back({w2, x + scale * carpet.cell_offsets[xi.symbols[i]][j]});
      }
    }
    xs = std::move(next);
    scale *= carpet.a;
  }
  const Rational width = scale;
  std::vector<std::pair<Word, Rational>> ys{{Word{}, Rational(0)}};
  Rational yscale(1);
  for (int i = 0; i < k; ++i) {
    std::vector<std::pair<Word, Rational>> next;
    for (const auto& [w, y] : ys) {
      for (std::uint32_t r = 0; r < carpet.m; ++r) {
        Word w2 = w;
        w2.symbols.push_back(r);
        next.push_back({w2, y + yscale * carpet.row_offsets[r]});
      }
    }
    ys = std::move(next);
    yscale *= carpet.b;
  }
  fam.rects.reserve(xs.size() * ys.size());
  for (const auto& [sw, y] : ys) {
    for (const auto& [xw, x] : xs) fam.rects.push_back({sw, xw, x, width, y, yscale});
  }
  return fam;
}

CylinderRect cylinder(const std::vector<AffineMap>& maps, const Word& word) {
  AffineMap f = AffineMap::identity();
  for (auto s : word.symbols) {
    if (s >= maps.size()) throw PreconditionError("word symbol out of range");
    f = f.compose(maps[s]);
  }
  return {word, {}, f.x_offset, f.x_scale, f.y_offset, f.y_scale};
}

std::vector<CylinderRect> cylinder_cover(const std::vector<AffineMap>& maps, const Rational& delta,
                                         std::size_t budget) {
  std::vector<CylinderRect> out;
  expand_cover(maps, delta, budget, [&](const Node& n, const std::vector<std::uint32_t>& path) {
    out.push_back({Word{path}, {}, n.x0, n.w, n.y0, n.h});
  });
  return out;
}

std::vector<Box> cover_boxes(const std::vector<AffineMap>& maps, const Rational& delta, std::size_t budget) {
  std::vector<Box> out;
  expand_cover(maps, delta, budget, [&](const Node& n, const std::vector<std::uint32_t>&) {
    out.push_back({n.x0.to_double(), n.w.to_double(), n.y0.to_double(), n.h.to_double()});
  });
  return out;
}

Box to_box(const CylinderRect& r) {
  return {r.x0.to_double(), r.width.to_double(), r.y0.to_double(), r.height.to_double()};
}

std::vector<Word> all_words(std::size_t base, std::size_t length) {
  std::vector<Word> out{Word{}};
  for (std::size_t i = 0; i < length; ++i) {
    std::vector<Word> next;
    next.reserve(out.size() * base);
    for (const auto& w : out) {
      for (std::uint32_t s = 0; s < base; ++s) {
        Word w2 = w;
        w2.symbols.push_back(s);
        next.push_back(std::move(w2));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace carpetlab
