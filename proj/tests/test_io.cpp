#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "mvgls/errors.hpp"
#include "mvgls/matrix_io.hpp"
#include "mvgls/rng.hpp"

using namespace mvgls;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("mvgls_io_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("format_double is shortest round-trip") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1234567.875, 0.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("matrix csv round trip preserves every bit") {
    TempDir tmp;
    Rng rng(1);
    Matrix values(7, 5);
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 5; ++j) values(i, j) = rng.normal() * std::pow(10.0, (i - 3));
    }
    write_matrix_csv(tmp.file("m.csv"), values);
    const Matrix back = read_matrix_csv(tmp.file("m.csv"));
    CHECK((back - values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("load_matrix_csv with a label column") {
    TempDir tmp;
    write_file(tmp.file("d.csv"),
               "g1,g2,group,g3\n"
               "1.5,2.5,1,3.5\n"
               "0.5,1.25,1,2\n"
               "-1,0,2,1\n"
               "4,2,2,0\n");
    LoadOptions opt;
    opt.group_column = "group";
    const auto loaded = load_matrix_csv(tmp.file("d.csv"), opt);
    CHECK(loaded.data.n == 4);
    CHECK(loaded.data.m == 3);
    CHECK(loaded.data.groups == std::vector<int>{1, 1, 2, 2});
    CHECK(loaded.variable_names == std::vector<std::string>{"g1", "g2", "g3"});
    CHECK(loaded.data.values(0, 2) == 3.5);
}

TEST_CASE("load_matrix_csv with a side label file") {
    TempDir tmp;
    write_file(tmp.file("d.csv"), "a,b\n1,2\n3,4\n5,6\n7,8\n");
    write_file(tmp.file("groups.txt"), "1\n2\n1\n2\n");
    LoadOptions opt;
    opt.group_file = tmp.file("groups.txt");
    const auto loaded = load_matrix_csv(tmp.file("d.csv"), opt);
    CHECK(loaded.data.groups == std::vector<int>{1, 2, 1, 2});
}

TEST_CASE("top-variance filter keeps the most variable columns in order") {
    TempDir tmp;
    // variances roughly 1, 5, 3 for a, b, c
    write_file(tmp.file("d.csv"),
               "group,a,b,c\n"
               "1,0,0,0\n"
               "1,1,2.2,1.7\n"
               "2,-1,-2.2,-1.7\n"
               "2,0.5,1.4,1\n");
    LoadOptions opt;
    opt.group_column = "group";
    opt.top_variance = 2;
    const auto loaded = load_matrix_csv(tmp.file("d.csv"), opt);
    CHECK(loaded.variable_names == std::vector<std::string>{"b", "c"});
    CHECK(loaded.kept_columns == std::vector<int>{1, 2});
}

TEST_CASE("unit variance rescaling hits variance one") {
    TempDir tmp;
    write_file(tmp.file("d.csv"),
               "group,a,b\n"
               "1,0,10\n"
               "1,4,30\n"
               "2,-2,12\n"
               "2,6,44\n");
    LoadOptions opt;
    opt.group_column = "group";
    opt.unit_variance = true;
    const auto loaded = load_matrix_csv(tmp.file("d.csv"), opt);
    for (int j = 0; j < loaded.data.m; ++j) {
        const double mean = loaded.data.values.col(j).mean();
        const double var = (loaded.data.values.col(j).array() - mean).square().sum() / 3.0;
        CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("parse errors carry line numbers") {
    TempDir tmp;
    write_file(tmp.file("ragged.csv"), "a,b,group\n1,2,1\n3,4\n");
    LoadOptions opt;
    opt.group_column = "group";
    try {
        load_matrix_csv(tmp.file("ragged.csv"), opt);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }

    write_file(tmp.file("alpha.csv"), "a,group\nx,1\n2,2\n");
    CHECK_THROWS_AS(load_matrix_csv(tmp.file("alpha.csv"), opt), ParseError);

    write_file(tmp.file("label.csv"), "a,group\n1,1\n2,3\n");
    CHECK_THROWS_AS(load_matrix_csv(tmp.file("label.csv"), opt), ParseError);

    write_file(tmp.file("nogroups.csv"), "a,b\n1,2\n");
    CHECK_THROWS_AS(load_matrix_csv(tmp.file("nogroups.csv"), LoadOptions{}), ParseError);
}

TEST_CASE("data csv writes reload bit-identically") {
    TempDir tmp;
    Rng rng(3);
    Matrix values(6, 4);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 4; ++j) values(i, j) = rng.normal();
    }
    const auto data = DataMatrix::create(values, {1, 1, 1, 2, 2, 2});
    write_data_csv(tmp.file("d.csv"), data, {"w", "x", "y", "z"});
    LoadOptions opt;
    opt.group_column = "group";
    const auto loaded = load_matrix_csv(tmp.file("d.csv"), opt);
    CHECK((loaded.data.values - data.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(loaded.data.groups == data.groups);
    CHECK(loaded.variable_names == std::vector<std::string>{"w", "x", "y", "z"});
}

TEST_CASE("transpose flag flips orientation") {
    TempDir tmp;
    // variables as rows: 2 variables, 3 samples
    write_file(tmp.file("t.csv"), "s1,s2,s3\n1,2,3\n4,5,6\n");
    write_file(tmp.file("groups.txt"), "1\n1\n2\n");
    LoadOptions opt;
    opt.transpose = true;
    opt.group_file = tmp.file("groups.txt");
    const auto loaded = load_matrix_csv(tmp.file("t.csv"), opt);
    CHECK(loaded.data.n == 3);
    CHECK(loaded.data.m == 2);
    CHECK(loaded.data.values(2, 1) == 6.0);
}
