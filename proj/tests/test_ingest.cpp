#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pcdrift/ingest.hpp"
#include "support.hpp"

using namespace pcdrift;

namespace {

RawSeries parse(const std::string& text) {
    std::istringstream in(text);
    return parse_csv(in, "test.csv");
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(LoadCsv, CompleteFile) {
    const auto raw = parse("date,A,B\n2020-01-01,1,2\n2020-01-02,3.5,4\n2020-01-03,5,-6e-1\n");
    EXPECT_EQ(raw.length(), 3u);
    EXPECT_EQ(raw.width(), 2u);
    EXPECT_EQ(raw.labels, (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(raw.missing_count(), 0u);
    EXPECT_DOUBLE_EQ(raw.values(1, 0), 3.5);
    EXPECT_DOUBLE_EQ(raw.values(2, 1), -0.6);
}

TEST(LoadCsv, EmptyCellIsMasked) {
    const auto raw = parse("date,A,B\n2020-01-01,1,2\n2020-01-02,,4\n2020-01-03,5,6\n");
    EXPECT_EQ(raw.missing_count(), 1u);
    EXPECT_TRUE(raw.is_missing(1, 0));
    EXPECT_FALSE(raw.is_missing(1, 1));
    EXPECT_TRUE(std::isnan(raw.values(1, 0)));
}

TEST(LoadCsv, ToleratesCrlfAndTrailingBlankLines) {
    const auto raw = parse("date,A\r\n2020-01-01,1\r\n2020-01-02,2\r\n\r\n");
    EXPECT_EQ(raw.length(), 2u);
}

TEST(LoadCsv, NonMonotonicTimestampNamesRow) {
    const auto msg = error_of("date,A\n2020-01-02,1\n2020-01-01,2\n");
    EXPECT_NE(msg.find("non-monotonic timestamp"), std::string::npos) << msg;
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
}

TEST(LoadCsv, DuplicateTimestamp) {
    EXPECT_NE(error_of("date,A\n2020-01-01,1\n2020-01-01,2\n").find("duplicate timestamp"), std::string::npos);
}

TEST(LoadCsv, DuplicateLabel) {
    const auto msg = error_of("date,A,A\n2020-01-01,1,2\n");
    EXPECT_NE(msg.find("duplicate label"), std::string::npos);
    EXPECT_NE(msg.find("column 3"), std::string::npos) << msg;
}

TEST(LoadCsv, RaggedRow) {
    const auto msg = error_of("date,A,B\n2020-01-01,1,2\n2020-01-02,1\n");
    EXPECT_NE(msg.find("ragged row"), std::string::npos);
    EXPECT_NE(msg.find("row 3"), std::string::npos);
}

TEST(LoadCsv, MalformedDate) {
    for (const char* bad : {"2020-13-01", "2020-02-30", "2021-02-29", "20200101", "2020-1-01", "x"}) {
        const auto msg = error_of(std::string("date,A\n") + bad + ",1\n");
        EXPECT_NE(msg.find("malformed date"), std::string::npos) << bad;
        EXPECT_NE(msg.find("row 2, column 1"), std::string::npos) << msg;
    }
    EXPECT_NO_THROW(parse("date,A\n2020-02-29,1\n2020-03-01T09:30,2\n2020-03-01T09:30:01,3\n"));
}

TEST(LoadCsv, MalformedNumber) {
    const auto msg = error_of("date,A,B\n2020-01-01,1,abc\n");
    EXPECT_NE(msg.find("malformed number"), std::string::npos);
    EXPECT_NE(msg.find("row 2, column 3"), std::string::npos) << msg;
}

TEST(LoadCsv, MissingFile) { EXPECT_THROW(load_csv("/nonexistent/file.csv"), DataError); }

TEST(FilterComplete, DropsColumnsWithGaps) {
    const auto raw = parse(
        "date,A,B,C,D,E\n"
        "2020-01-01,1,,3,4,5\n"
        "2020-01-02,1,2,3,,5\n"
        "2020-01-03,1,2,3,4,5\n");
    const auto f = filter_complete(raw);
    EXPECT_EQ(f.series.labels, (std::vector<std::string>{"A", "C", "E"}));
    EXPECT_EQ(f.dropped, (std::vector<std::string>{"B", "D"}));
    EXPECT_EQ(f.series.missing_count(), 0u);
    EXPECT_DOUBLE_EQ(f.series.values(2, 1), 3.0);
}

TEST(FilterComplete, CountMatchesCompleteColumns) {
    // 250 columns, 147 of them complete.
    std::mt19937_64 rng(3);
    std::ostringstream csv;
    csv << "date";
    for (int i = 0; i < 250; ++i) csv << ",S" << i;
    csv << '\n';
    std::vector<bool> gappy(250, false);
    for (int i = 0, made = 0; made < 103; ++i)
        if (rng() % 2 && !gappy[i % 250]) {
            gappy[i % 250] = true;
            ++made;
        }
    for (int t = 0; t < 20; ++t) {
        csv << "2020-01-" << (t + 10);
        for (int i = 0; i < 250; ++i) csv << ',' << ((gappy[i] && t == i % 20) ? "" : "1.5");
        csv << '\n';
    }
    const auto f = filter_complete(parse(csv.str()));
    EXPECT_EQ(f.series.width(), 147u);
    EXPECT_EQ(f.dropped.size(), 103u);
}

TEST(FilterComplete, IdentityWithoutGapsAndIdempotent) {
    const auto raw = parse("date,A,B\n2020-01-01,1,2\n2020-01-02,3,\n");
    const auto once = filter_complete(raw).series;
    const auto twice = filter_complete(once);
    EXPECT_TRUE(twice.dropped.empty());
    EXPECT_EQ(twice.series.labels, once.labels);
    EXPECT_EQ(twice.series.values, once.values);
}

TEST(FilterComplete, AllDropped) {
    EXPECT_THROW(filter_complete(parse("date,A\n2020-01-01,\n")), DataError);
}

TEST(ToReturns, Simple) {
    const auto r = to_returns(parse("date,A\n2020-01-01,100\n2020-01-02,110\n"), ReturnKind::simple);
    ASSERT_EQ(r.length(), 1u);
    EXPECT_NEAR(r.data(0, 0), 0.10, 1e-15);
    EXPECT_EQ(r.timestamps.front(), "2020-01-02");
}

TEST(ToReturns, LogOfConstantIsZero) {
    const auto r = to_returns(parse("date,A\n2020-01-01,100\n2020-01-02,100\n2020-01-03,100\n"), ReturnKind::log);
    ASSERT_EQ(r.length(), 2u);
    EXPECT_EQ(r.data(0, 0), 0.0);
    EXPECT_EQ(r.data(1, 0), 0.0);
}

TEST(ToReturns, NoneIsIdentity) {
    const auto raw = parse("date,A,B\n2020-01-01,21.5,30.1\n2020-01-02,19.0,28.4\n");
    const auto r = to_returns(raw, ReturnKind::none);
    EXPECT_EQ(r.data, raw.values);
    EXPECT_EQ(r.timestamps, raw.timestamps);
}

TEST(ToReturns, NonPositiveLevelUnderLog) {
    try {
        to_returns(parse("date,A,B\n2020-01-01,1,2\n2020-01-02,0,3\n"), ReturnKind::log);
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("'A'"), std::string::npos);
        EXPECT_NE(msg.find("2020-01-02"), std::string::npos);
    }
}

TEST(ToReturns, RejectsMaskedInput) {
    EXPECT_THROW(to_returns(parse("date,A\n2020-01-01,1\n2020-01-02,\n"), ReturnKind::log), DataError);
}

TEST(ToReturns, LogReturnsReconstructRelativeLevels) {
    std::mt19937_64 rng(11);
    std::lognormal_distribution<double> step(0.0, 0.02);
    RawSeries raw;
    raw.labels = {"A", "B", "C"};
    const std::size_t t_len = 500;
    raw.values = Matrix(t_len, 3);
    raw.missing.assign(t_len * 3, 0);
    for (std::size_t i = 0; i < 3; ++i) {
        double v = 50.0 + 10.0 * static_cast<double>(i);
        for (std::size_t t = 0; t < t_len; ++t) {
            raw.values(t, i) = v;
            v *= step(rng);
        }
    }
    for (std::size_t t = 0; t < t_len; ++t) raw.timestamps.push_back(std::to_string(t));
    const auto r = to_returns(raw, ReturnKind::log);
    for (std::size_t i = 0; i < 3; ++i) {
        double cum = 0.0;
        for (std::size_t t = 1; t < t_len; ++t) {
            cum += r.data(t - 1, i);
            const double expected = raw.values(t, i) / raw.values(0, i);
            EXPECT_NEAR(std::exp(cum) / expected, 1.0, 1e-12);
        }
    }
}

TEST(RequireVariation, FlagsConstantColumn) {
    SeriesMatrix s;
    s.labels = {"A", "B"};
    s.data = Matrix(3, 2, 1.0);
    s.data(1, 0) = 2.0;
    EXPECT_THROW(require_variation(s), DataError);
    s.data(2, 1) = 0.5;
    EXPECT_NO_THROW(require_variation(s));
}
