#include <doctest.h>

#include "ptycho/surrogate.hpp"
#include "support.hpp"

using namespace ptycho;

namespace {

TestPoint random_point(Rng& rng, const TestPoint& near, double radius) {
  TestPoint p = near;
  for (auto& v : p.probe) v += radius * testkit::gauss_c(rng);
  for (auto& v : p.object) v += radius * testkit::gauss_c(rng);
  return p;
}

}  // namespace

TEST_CASE("surrogate majorizes the misfit and touches it at the anchor") {
  Rng rng(51);
  for (int inst = 0; inst < 40; ++inst) {
    auto ds = testkit::small_dataset(rng, 12, 8, 4);  // four regions
    // Data from a different object, so the misfit is not zero.
    ds.intensities = measure(testkit::random_smooth_field(rng, 8), testkit::random_smooth_field(rng, 12),
                             ds.geometry);
    const auto q = testkit::random_field(rng, 8), z = testkit::random_field(rng, 12);
    const auto anchors = build_anchors(q, z, ds);
    const auto agree = check_objective_agreement(q, z, ds, anchors);
    CHECK(agree.ok);
    CHECK(agree.gap <= 1e-12 * (1 + agree.misfit));
    std::vector<TestPoint> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(random_point(rng, {q, z}, 0.1 + rng.uniform()));
    const auto maj = check_majorization(pts, ds, anchors);
    CHECK(maj.ok);
    CHECK(maj.min_margin >= -1e-10 * (1 + agree.surrogate));
    CHECK(maj.margins.size() == pts.size());
    CHECK(maj.region_margins.front().size() == ds.geometry.count());
  }
}

TEST_CASE("per-region margins are nonnegative as well") {
  // Reported but not asserted by the certifier; the inequality holds per
  // region since R_k is the projection of Q z_k onto the modulus set.
  Rng rng(52);
  auto ds = testkit::small_dataset(rng, 12, 8, 4);
  ds.intensities = measure(testkit::random_smooth_field(rng, 8), testkit::random_smooth_field(rng, 12),
                           ds.geometry);
  const auto q = testkit::random_field(rng, 8), z = testkit::random_field(rng, 12);
  const auto anchors = build_anchors(q, z, ds);
  std::vector<TestPoint> pts{random_point(rng, {q, z}, 1.0)};
  const auto maj = check_majorization(pts, ds, anchors);
  for (double m : maj.region_margins[0]) CHECK(m >= -1e-10);
}

TEST_CASE("gradients of surrogate and misfit agree at the anchor") {
  Rng rng(53);
  auto ds = testkit::small_dataset(rng, 12, 8, 4);
  ds.intensities = measure(testkit::random_smooth_field(rng, 8), testkit::random_smooth_field(rng, 12),
                           ds.geometry);
  const auto q = testkit::random_smooth_field(rng, 8), z = testkit::random_smooth_field(rng, 12);
  const auto anchors = build_anchors(q, z, ds);
  const auto rep = check_gradient_agreement(q, z, ds, anchors);
  CHECK(rep.ok);
  CHECK(rep.max_deviation <= 1e-10);
  // Moved away from the anchor the gradients differ.
  const auto far = check_gradient_agreement(testkit::random_smooth_field(rng, 8), z, ds, anchors);
  CHECK_FALSE(far.ok);
}

TEST_CASE("phase cache keeps the phase at a persistent zero") {
  PhaseCache cache(2, 2);
  CHECK(cache.last_update(0) == -1);
  for (cplx p : cache.phasors(1)) CHECK(p == cplx(1.0));
  ComplexField f(2, 2, std::vector<cplx>{cplx(0, 3), 0.0, cplx(-2, 0), cplx(1, 1)});
  update_phase_cache(cache, 0, f, 0);
  const cplx kept = cache.phasors(0)[0];
  CHECK(std::abs(kept - cplx(0, 1)) < 1e-15);
  // Coefficient 0 goes to zero for several iterations; the others move.
  for (long it = 1; it <= 4; ++it) {
    f[0] = 0.0;
    f[3] = std::polar(1.0, 0.3 * static_cast<double>(it));
    update_phase_cache(cache, 0, f, it);
    CHECK(cache.phasors(0)[0] == kept);
    CHECK(cache.phasors(0)[1] == cplx(1.0));
    CHECK(std::abs(cache.phase(0)[3] - 0.3 * static_cast<double>(it)) < 1e-14);
    CHECK(cache.last_update(0) == it);
  }
  CHECK(cache.last_update(1) == -1);
  CHECK_THROWS_AS(cache.phasors(2), IndexError);
}

TEST_CASE("anchors read the cache without modifying it") {
  Rng rng(54);
  auto ds = testkit::small_dataset(rng, 8, 4, 4);
  PhaseCache cache(ds.geometry.count(), 4);
  for (std::size_t k = 0; k < cache.regions(); ++k) {
    for (auto& p : cache.phasors(k)) p = std::polar(1.0, 0.4);
  }
  const PhaseCache before = cache;
  const ComplexField zero_obj(8, 8);
  const auto anchors = build_anchors(*ds.truth_probe, zero_obj, ds, &cache);
  CHECK(cache == before);
  // With Q z = 0 every coefficient takes the cached phase.
  const auto plain = build_anchors(*ds.truth_probe, zero_obj, ds);
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    for (std::size_t i = 0; i < 16; ++i) {
      CHECK(std::abs(anchors[k].revised[i] - std::polar(1.0, 0.4) * plain[k].revised[i]) < 1e-12);
    }
  }
}

TEST_CASE("report text mentions the verdict") {
  AgreementReport a;
  a.ok = false;
  CHECK(to_text(a).find("FAIL") != std::string::npos);
}
