#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dynamics/identities.hpp"
#include "expansion_oracle.hpp"
#include "test_support.hpp"

using namespace qk;
using namespace qk::test;

namespace {

Expansion compose(const Expansion& lead, const Expansion& tail, double c) {
  Expansion out;
  for (const auto& a : lead.terms)
    for (const auto& b : tail.terms) {
      ExpansionTerm t{c * a.coefficient * b.coefficient, a.factors};
      t.factors.insert(t.factors.end(), b.factors.begin(), b.factors.end());
      out.terms.push_back(std::move(t));
    }
  return out;
}

Expansion sum(std::initializer_list<Expansion> parts) {
  Expansion out;
  for (const auto& p : parts) out.terms.insert(out.terms.end(), p.terms.begin(), p.terms.end());
  return out.normalize();
}

Expansion single(Labels cluster, Labels added, double c = 1.0) {
  Expansion e;
  e.terms.push_back({c, {factor(std::move(cluster), std::move(added))}});
  return e;
}

}  // namespace

TEST_CASE("recursion reproduces the printed second and third order operators") {
  for (const Labels& y : {Labels{1}, Labels{1, 2}, Labels{1, 2, 3}}) {
    const int s = static_cast<int>(y.size());
    CHECK(generated_expansion(y, {}).same_terms(single(y, {}).normalize()));
    const Expansion g2 = generated_expansion(y, {s + 1});
    const Expansion g3 = generated_expansion(y, {s + 1, s + 2});
    CHECK_MESSAGE(g2.same_terms(printed_g2(y), 1e-15), g2.dump());
    CHECK_MESSAGE(g3.same_terms(printed_g3(y), 1e-15), g3.dump());
  }
}

TEST_CASE("printed kinetic cluster expansion of the third scattering cumulant") {
  const Labels y{1, 2};
  const int s = 2;
  Expansion a2_last, a3_inner, pair_inner;
  for (int i = 1; i <= s + 1; ++i) a2_last.terms.push_back({1.0, {factor({i}, {s + 2})}});
  for (int i = 1; i <= s; ++i) a3_inner.terms.push_back({1.0, {factor({i}, {s + 1, s + 2})}});
  for (int i1 = 1; i1 <= s; ++i1)
    for (int i2 = i1 + 1; i2 <= s; ++i2)
      pair_inner.terms.push_back({2.0, {factor({i1}, {s + 1}), factor({i2}, {s + 2})}});
  const Expansion rhs =
      sum({generated_expansion(y, {s + 1, s + 2}),
           compose(generated_expansion(y, {s + 1}), a2_last, 2.0),
           compose(generated_expansion(y, {}), sum({a3_inner, pair_inner}), 1.0)});
  CHECK_MESSAGE(rhs.same_terms(single(y, {s + 1, s + 2}).normalize(), 1e-14), rhs.dump());
}

TEST_CASE("term dump and normalization") {
  CHECK(factor({1, 2}, {3, 4}).to_string() == "A3({1,2};3,4)");
  Expansion e;
  e.terms.push_back({1.0, {factor({1}, {2})}});
  e.terms.push_back({-1.0, {factor({1}, {2})}});
  e.terms.push_back({0.5, {factor({1}, {})}});
  e.normalize();
  CHECK(e.size() == 1);
  CHECK(e.terms[0].coefficient == 0.5);
}

TEST_CASE("numerical evaluation of generated operators") {
  const Scenario sc = load_fixture("a_small_identities");
  const Dynamics dyn(HamiltonianSpec{sc.kinetic, sc.potential, sc.epsilon});
  const CorrelationFamily corr = sc.correlations();
  const GeneratedEvolution gen(dyn, corr, 2);
  const Labels y{1, 2};
  for (const auto& f : probe_operators(2, {1, 2, 3, 4}, 9)) {
    const double t = 0.5;
    const auto direct = gen.apply_generated(t, y, {3, 4}, f);
    const auto printed = gen.apply(t, printed_g3(y), f);
    CHECK(trace_norm(direct - printed) < 1e-11);
  }
  CHECK_THROWS_AS(gen.apply_generated(0.1, {1}, {2, 3, 4}, probe_operators(2, {1, 2, 3, 4}, 1)[0]),
                  InvalidArgument);
  CHECK_THROWS(GeneratedEvolution(dyn, corr, 4));
}

TEST_CASE("kinetic cluster expansion and traced closed form") {
  const Scenario sc = load_fixture("a_small_identities");
  const Dynamics dyn(HamiltonianSpec{sc.kinetic, sc.potential, sc.epsilon});
  const CorrelationFamily corr = sc.correlations();
  const GeneratedEvolution gen(dyn, corr, 2);
  for (double t : {0.1, 0.5})
    for (std::size_t s = 1; s <= 2; ++s)
      for (std::size_t n = 0; n <= 2; ++n) {
        CHECK(gen.kce_residual(t, s, n, probe_operators(2, label_range(1, int(s + n)), 4)) <
              1e-9);
        CHECK(traced_closed_form_residual(gen, t, int(s), int(n), 4) < 1e-10);
      }
}

TEST_CASE("probe set is deterministic and normalized") {
  const auto a = probe_operators(2, {1, 2}, 77);
  const auto b = probe_operators(2, {1, 2}, 77);
  const auto c = probe_operators(2, {1, 2}, 78);
  REQUIRE(a.size() == 8 + 16);
  CHECK(max_abs(a[0].matrix() - b[0].matrix()) == 0.0);
  CHECK(max_abs(a[0].matrix() - c[0].matrix()) > 0.0);
  CHECK(a[0].matrix().norm() == doctest::Approx(1.0));
  CHECK(label_range(3, 5) == Labels{3, 4, 5});
}
