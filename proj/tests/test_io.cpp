#include "plq/error.hpp"
#include "plq/io.hpp"

#include <doctest.h>

#include <filesystem>

using namespace plq;
namespace fs = std::filesystem;

namespace {
fs::path scratch() {
    const auto p = fs::temp_directory_path() / "plq_io_test";
    fs::create_directories(p);
    return p;
}
}  // namespace

TEST_CASE("penalty json") {
    const auto h = io::penalty_from_json(io::json::parse(R"({"kind": "huber", "kappa": 1, "dim": 2})"), ".");
    CHECK(evaluate(h, Vec::Constant(2, 2.0)) == doctest::Approx(3.0));
    const auto hinge = io::penalty_from_json(
        io::json::parse(R"({"lower": [0], "upper": [1], "M": [[0]], "b": [-0.5], "B": [[1]]})"), ".");
    CHECK(evaluate(hinge, Vec::Constant(1, 2.0)) == doctest::Approx(1.5));
    const auto half = io::penalty_from_json(
        io::json::parse(R"({"lower": [0], "upper": [null], "M": 0, "b": [0], "B": 1})"), ".");
    CHECK(std::isinf(half.intervals()->upper(0)));
    CHECK_THROWS_AS(io::penalty_from_json(io::json::parse(R"({"kind": "bogus"})"), "."), Error);
}

TEST_CASE("csv round trip") {
    const auto dir = scratch();
    io::write_text(dir / "z.csv", "k,z_1\n1,0.5\n2,-1.25\n# comment\n3,2\n");
    const auto z = io::measurements_from_csv(dir / "z.csv", 1);
    REQUIRE(z.size() == 3);
    CHECK(z[1](0) == -1.25);
    io::write_text(dir / "bad.csv", "k,z\n1,x\n");
    CHECK_THROWS_AS(io::read_csv(dir / "bad.csv"), Error);
    CHECK_THROWS_AS(io::read_csv(dir / "missing.csv"), Error);

    const std::string x = io::xhat_csv({Vec::Constant(2, 1.0), Vec::Constant(2, 0.5)});
    CHECK(x == "k,xhat_1,xhat_2\n1,1,1\n2,0.5,0.5\n");
}

TEST_CASE("model json") {
    const auto s = io::model_from_json(io::json::parse(R"({"spline": {"dt": 0.1, "lambda2": 2, "N": 4}})"), ".");
    CHECK(s.N == 4);
    CHECK(s.n == 2);
    const auto m = io::model_from_json(
        io::json::parse(R"({"N": 3, "G": [[[1]]], "H": [[[1]]], "Q": [[[1]]], "R": [[[2]]], "x0": [0]})"), ".");
    CHECK(m.N == 3);
    CHECK(m.R[2](0, 0) == 2.0);
    CHECK_THROWS_AS(io::model_from_json(io::json::parse(R"({"N": 3})"), "."), Error);
}

TEST_CASE("problem json") {
    const auto p = io::problem_from_json(io::json::parse(R"({
        "V": {"kind": "l1", "dim": 2}, "W": {"kind": "l2", "dim": 1},
        "H": [[1], [2]], "G": [[1]], "R": [[1, 0], [0, 1]], "Q": [[1]], "z": [1, 3], "mu": [0]})"),
                                         ".");
    const auto r = solve(p, {}, InitStrategy::l1_l2);
    CHECK(r.stats.status == SolveStatus::converged);
}
