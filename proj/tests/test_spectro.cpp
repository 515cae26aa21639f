#include <doctest.h>

#include <cmath>

#include "spescreen/error.hpp"
#include "spescreen/rng.hpp"
#include "spescreen/spectro/spectro.hpp"

using namespace spescreen;
using namespace spescreen::spectro;

namespace {

ExcitedStateTable simple(double es1, std::vector<Triplet> t, std::optional<double> gs = 0.05) {
  ExcitedStateTable x;
  x.singlets = {{es1, 0.5, 0.0, 1239.84 / es1}};
  x.triplets = std::move(t);
  x.gs_soc_t1 = gs;
  x.normalize();
  return x;
}

// brute force over every subset assignment
std::pair<double, double> enumerate(const ExcitedStateTable& t) {
  double lo = 0, hi = 0;
  for (const auto& x : t.triplets) {
    if (x.energy_eV > t.singlets[0].energy_eV) hi += x.soc_s1 * x.soc_s1;
    else lo += x.soc_s1 * x.soc_s1;
  }
  return {std::sqrt(lo), std::sqrt(hi)};
}

}  // namespace

TEST_CASE("SOC aggregates") {
  const auto t = simple(1.2, {{1.0, 0.3}, {1.5, 0.4}});
  CHECK(soc_metric(t) == doctest::Approx(0.3));
  CHECK(rsoc_metric(t) == doctest::Approx(0.4));
  CHECK(soc_metric(simple(2.0, {{1.0, 3}, {1.5, 4}})) == doctest::Approx(5.0));
  CHECK(rsoc_metric(simple(2.0, {{1.0, 3}, {1.5, 4}})) == 0.0);
  CHECK(soc_metric(simple(0.5, {{1.0, 3}, {1.5, 4}})) == 0.0);
  CHECK(soc_metric(simple(1.0, {})) == 0.0);
  // degenerate triplet goes to SOC
  CHECK(soc_metric(simple(1.0, {{1.0, 0.7}})) == doctest::Approx(0.7));
  CHECK(rsoc_metric(simple(1.0, {{1.0, 0.7}})) == 0.0);

  CHECK(gssoc_metric(simple(1.0, {}, 0.05)) == 0.05);
  CHECK(gssoc_metric(simple(1.0, {}, 0.0)) == 0.0);
  CHECK_THROWS_AS(simple(1.0, {}, -0.1), ValidationError);
  CHECK_THROWS_AS(gssoc_metric(simple(1.0, {}, std::nullopt)), ValidationError);
  CHECK_THROWS_AS(simple(1.0, {{1.0, -1}}), ValidationError);
  ExcitedStateTable empty;
  CHECK_THROWS_AS(soc_metric(empty), ValidationError);

  Rng rng(77);
  for (int rep = 0; rep < 2000; ++rep) {
    std::vector<Triplet> tr;
    const auto n = rng.below(11);
    for (std::uint64_t i = 0; i < n; ++i) tr.push_back({rng.uniform(0.5, 4.0), rng.uniform(0.0, 6.0)});
    const auto t2 = simple(rng.uniform(1.0, 3.0), tr);
    const auto [lo, hi] = enumerate(t2);
    CHECK(soc_metric(t2) == lo);
    CHECK(rsoc_metric(t2) == hi);
    double all = 0;
    for (const auto& x : tr) all += x.soc_s1 * x.soc_s1;
    CHECK(std::abs(soc_metric(t2) * soc_metric(t2) + rsoc_metric(t2) * rsoc_metric(t2) - all) < 1e-12);
    // monotone when adding a triplet on either side
    auto more = t2;
    more.triplets.push_back({t2.singlets[0].energy_eV * 0.9, rng.uniform(0, 2)});
    more.triplets.push_back({t2.singlets[0].energy_eV * 1.1, rng.uniform(0, 2)});
    more.normalize();
    CHECK(soc_metric(more) >= soc_metric(t2));
    CHECK(rsoc_metric(more) >= rsoc_metric(t2));
  }
}

TEST_CASE("Stark coefficients") {
  // e a0 (1 kV/cm) / h in MHz, and (e a0)^2/E_h (1 kV/cm)^2 / h in MHz
  CHECK(stark_c1() == doctest::Approx(1279.5).epsilon(1e-4));
  CHECK(stark_c2() == doctest::Approx(2.4883e-4).epsilon(1e-4));
  struct Row {
    double mu, alpha, a, b;
  };
  for (const Row& r : {Row{0.0458, 644.28, 58.58, -0.0801}, Row{0.0616, 612.15, 78.84, -0.0761},
                       Row{0.0668, 617.43, 85.44, -0.0768}}) {
    const auto c = stark_coefficients({r.mu, r.alpha});
    CHECK(c.a == doctest::Approx(r.a).epsilon(0.01));
    CHECK(c.b == doctest::Approx(r.b).epsilon(0.01));
  }
  CHECK(stark_coefficients({0.0, 600}).a == 0.0);
  CHECK(stark_coefficients({-0.05, 600}).a == stark_coefficients({0.05, 600}).a);
  CHECK(stark_coefficients({0.05, -600}).b > 0.0);

  const auto c = stark_coefficients({0.0616, 612.15});
  for (double e : {1.0, 5.0, 20.0}) {
    const double h = 0.5;
    const double d2 = c.shift_MHz(e + h) - 2 * c.shift_MHz(e) + c.shift_MHz(e - h);
    CHECK(d2 / (h * h) == doctest::Approx(2 * c.b).epsilon(1e-9));
  }
  CHECK(c.shift_MHz(-3.0) == c.shift_MHz(3.0));
}

TEST_CASE("excited-state table json") {
  const std::string js = R"({
    "singlets": [{"energy_eV": 2.3, "fosc": 0.1, "rotary_1e40cgs": 1.5, "lambda_nm": 539.1},
                 {"energy_eV": 1.84, "fosc": 0.77, "rotary_1e40cgs": -0.17, "lambda_nm": 674.6}],
    "triplets": [{"energy_eV": 2.5, "soc_s1_cm1": 4.08}, {"energy_eV": 0.9, "soc_s1_cm1": 0.15}],
    "gs_soc_t1_cm1": 0.05,
    "emission": {"fosc": 0.77, "lambda_nm": 706.0}})";
  const auto t = table_from_json(js);
  CHECK(t.s1().fosc == 0.77);  // sorted
  CHECK(t.triplets[0].energy_eV == 0.9);
  const auto back = table_from_json(table_to_json(t));
  CHECK(back.triplets.size() == 2);
  CHECK(back.emission->lambda_nm == 706.0);
  CHECK(soc_metric(back) == doctest::Approx(0.15));
  CHECK(rsoc_metric(back) == doctest::Approx(4.08));
  CHECK_THROWS_AS(table_from_json("{\"singlets\": [{\"energy_eV\": -1}]}"), ValidationError);
  CHECK_THROWS_AS(table_from_json("{}"), ValidationError);
  CHECK_THROWS_AS(load_table("/nonexistent.json"), ValidationError);

  SUBCASE("assembles the DBT-CS row") {
    CandidateInputs in{"DBT-CS", 1.00, t, 0.0061, -0.52};
    const auto r = assemble_candidate(in);
    CHECK(r.tanimoto == 1.00);
    CHECK(r.fosc_abs == 0.77);
    CHECK(r.fosc_em == 0.77);
    CHECK(r.lambda_abs_nm == 674.6);
    CHECK(r.lambda_em_nm == 706.0);
    CHECK(r.rotary == -0.17);
    CHECK(r.soc == doctest::Approx(0.15));
    CHECK(r.rsoc == doctest::Approx(4.08));
    CHECK(r.gs_soc == 0.05);
    CHECK(r.s_vc == 0.0061);
    CHECK(r.e_bind_eV == -0.52);
    const auto fixture = load_records(SPESCREEN_TEST_DATA "/candidates.csv");
    const auto& row = fixture.front();
    for (auto [x, y] : {std::pair{r.fosc_abs, row.fosc_abs}, {r.lambda_em_nm, row.lambda_em_nm}, {r.soc, row.soc},
                        {r.rsoc, row.rsoc}, {r.gs_soc, row.gs_soc}, {r.s_vc, row.s_vc}, {r.e_bind_eV, row.e_bind_eV}})
      CHECK(x == doctest::Approx(y).epsilon(1e-12));

    in.e_bind.reset();
    try {
      assemble_candidate(in);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("E_bind") != std::string::npos);
    }
    in.s_vc.reset();
    try {
      assemble_candidate(in);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("S_VC, E_bind") != std::string::npos);
    }
  }
}

TEST_CASE("candidate csv") {
  const auto rows = load_records(SPESCREEN_TEST_DATA "/candidates.csv");
  REQUIRE(rows.size() == 10);
  CHECK(rows[3].id == "Tetrabenzo[de,hi,op,st]pentacene/2000909");
  CHECK(rows[2].rotary == 276.16);
  const auto back = records_from_csv(records_to_csv(rows));
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].id == rows[i].id);
    CHECK(std::round(back[i].s_vc * 1e4) == std::round(rows[i].s_vc * 1e4));
    CHECK(back[i].lambda_em_nm == rows[i].lambda_em_nm);
    CHECK(back[i].e_bind_eV == rows[i].e_bind_eV);
  }
  CHECK(records_to_csv(back) == records_to_csv(rows));
  CHECK_THROWS_AS(records_from_csv("id,x\n"), ValidationError);
  // missing metric columns are named
  try {
    records_from_csv("id,tanimoto,fosc_abs,fosc_em,lambda_abs_nm,lambda_em_nm,rotary_1e40cgs,rsoc,gs_soc,e_bind_eV\n");
    FAIL("accepted a table without soc and s_vc");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("soc, s_vc") != std::string::npos);
  }
  // column order is free
  {
    std::string csv = "s_vc,id,tanimoto,fosc_abs,fosc_em,lambda_abs_nm,lambda_em_nm,rotary_1e40cgs,soc,rsoc,gs_soc,e_bind_eV\n";
    csv += "0.5,x,0.1,0.2,0.3,400,410,0,1,2,3,-1.5\n";
    const auto r = records_from_csv(csv);
    REQUIRE(r.size() == 1);
    CHECK(r[0].s_vc == 0.5);
    CHECK(r[0].id == "x");
    CHECK(r[0].e_bind_eV == -1.5);
  }
  CHECK_THROWS_AS(records_from_csv(std::string(kCandidateHeader) + "\na,1,2\n"), ValidationError);
  CHECK_THROWS_AS(records_from_csv(std::string(kCandidateHeader) + "\na,1,2,3,4,5,6,7,8,9,ten,11\n"), ValidationError);
  CHECK_THROWS_AS(records_from_csv(std::string(kCandidateHeader) + "\na,1,2,3,4,5,6,7,8,9,nan,11\n"), ValidationError);
}
