// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pipechain/harness/runner.hpp"
#include "support/fixtures.hpp"

using namespace pipechain;
using namespace pipechain::harness;
using pipechain::testing::TempDir;
using nlohmann::json;

namespace {

std::string demo_text() {
    std::ifstream in(std::string(PIPECHAIN_SOURCE_DIR) + "/scenarios/demo.scenario");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ProducerSpec spec(Format f, std::uint64_t rate_millihz = 1000) {
    ProducerSpec s;
    s.producer_id = "p1";
    s.format = f;
    s.parameter = Parameter::Temperature;
    s.unit = "C";
    s.rate_millihz = rate_millihz;
    s.value_model = ValueModel{21'500, 3'250, 400, 60, 7};
    s.principal = "derive:p1";
    return s;
}

Reading reading_of(const std::variant<Reading, ParseError>& v) {
    if (auto* e = std::get_if<ParseError>(&v)) ADD_FAILURE() << e->reason;
    return std::get<Reading>(v);
}

const char* kQuiet = R"(
ledger = quiet
seed = 9
messages = 6
producer = a format=csv parameter=temperature rate=2 base=20 amplitude=1
producer = b format=jsonl parameter=pressure unit=kPa rate=1 base=101.3 noise=0.2
)";

}  // namespace

TEST(Normalize, ExamplesInEachFormat) {
    EXPECT_EQ(reading_of(normalize("s1,temperature,25.31,C,1677651200", Format::Csv)),
              (Reading{"s1", Parameter::Temperature, 25'310, "C", 1677651200}));
    EXPECT_EQ(reading_of(normalize(R"({"producer":"s1","parameter":"pressure","value":101.325,"unit":"kPa","timestamp":5})",
                                   Format::JsonLines)),
              (Reading{"s1", Parameter::Pressure, 101'325, "kPa", 5}));
    EXPECT_EQ(reading_of(normalize("producer=s1 parameter=moisture value=-0.0005 unit=% timestamp=7", Format::KeyValueText)),
              (Reading{"s1", Parameter::Moisture, -1, "%", 7}));
}

TEST(Normalize, RejectsMalformedRecords) {
    for (auto [line, fmt] : std::vector<std::pair<std::string, Format>>{
             {"s1,temperature,,C,1", Format::Csv},
             {"s1,temperature,abc,C,1", Format::Csv},
             {"s1,wind,1,C,1", Format::Csv},
             {"s1,temperature,1,C", Format::Csv},
             {"s1,temperature,1,C,-4", Format::Csv},
             {"{\"producer\":\"s1\"}", Format::JsonLines},
             {"[1,2]", Format::JsonLines},
             {"producer=s1 parameter=humidity value=1 unit=% timestamp=1 extra=2", Format::KeyValueText},
             {"producer=s1 producer=s2 parameter=humidity value=1 unit=% timestamp=1", Format::KeyValueText},
         }) {
        auto r = normalize(line, fmt, 3);
        ASSERT_TRUE(std::holds_alternative<ParseError>(r)) << line;
        EXPECT_EQ(std::get<ParseError>(r).line, 3u);
    }
}

TEST(ScaleDecimal, RoundsHalfAwayFromZero) {
    EXPECT_EQ(scale_decimal("25.31"), 25'310);
    EXPECT_EQ(scale_decimal("0.0005"), 1);
    EXPECT_EQ(scale_decimal("0.00049999"), 0);
    EXPECT_EQ(scale_decimal("-0.0005"), -1);
    EXPECT_EQ(scale_decimal("1e3"), 1'000'000);
    EXPECT_EQ(scale_decimal("1.5E-2"), 15);
    EXPECT_EQ(scale_decimal("+7"), 7'000);
    EXPECT_FALSE(scale_decimal(""));
    EXPECT_FALSE(scale_decimal("1.2.3"));
    EXPECT_FALSE(scale_decimal("nan"));
    EXPECT_FALSE(scale_decimal("1e400"));
    EXPECT_FALSE(scale_decimal("99999999999999999999"));
}

TEST(ScaleDecimal, FormatRoundTripsExactly) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 5000; ++i) {
        const auto v = static_cast<std::int64_t>(rng() % 2'000'000'000'001ULL) - 1'000'000'000'000;
        EXPECT_EQ(scale_decimal(format_scaled(v)), v) << v;
    }
    EXPECT_EQ(format_scaled(-1), "-0.001");
    EXPECT_EQ(format_scaled(25'310), "25.31");
    EXPECT_EQ(format_scaled(4'000), "4");
}

TEST(Producer, SameSeedSameStream) {
    auto a = run_producer(spec(Format::Csv), 50, 1000);
    auto b = run_producer(spec(Format::Csv), 50, 1000);
    ASSERT_EQ(a.size(), 50u);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].line, b[i].line);
    auto other = spec(Format::Csv);
    other.value_model.noise_seed = 8;
    auto c = run_producer(other, 50, 1000);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].line != c[i].line;
    EXPECT_TRUE(differs);
}

TEST(Producer, FormatsCarryIdenticalReadings) {
    auto csv = run_producer(spec(Format::Csv), 40, 1000);
    auto js = run_producer(spec(Format::JsonLines), 40, 1000);
    auto kv = run_producer(spec(Format::KeyValueText), 40, 1000);
    for (std::size_t i = 0; i < csv.size(); ++i) {
        Reading r = reading_of(normalize(csv[i]));
        EXPECT_EQ(r, reading_of(normalize(js[i])));
        EXPECT_EQ(r, reading_of(normalize(kv[i])));
        EXPECT_EQ(r.value_scaled, model_value(spec(Format::Csv), i));
    }
}

TEST(Producer, RenderNormalizeRoundTrip) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 2000; ++i) {
        Reading r{"dev-" + std::to_string(i % 7), static_cast<Parameter>(i % 4),
                  static_cast<std::int64_t>(rng() % 200'000'001) - 100'000'000, i % 2 ? "kPa" : "C", rng() % 4'000'000'000};
        for (Format f : {Format::Csv, Format::JsonLines, Format::KeyValueText}) {
            EXPECT_EQ(reading_of(normalize(render(r, f), f)), r) << render(r, f);
        }
    }
}

TEST(Producer, TimestampsFollowTheRate) {
    for (std::uint64_t rate : {1u, 250u, 1000u, 3000u, 100'000u}) {
        auto recs = run_producer(spec(Format::Csv, rate), 200, 1'000'000);
        for (std::size_t k = 0; k < recs.size(); ++k) {
            const Reading r = reading_of(normalize(recs[k]));
            EXPECT_EQ(r.source_timestamp, 1'000'000 + k * 1000 / rate);
            // At most ceil(rate) records share any one second.
            if (k >= (rate + 999) / 1000) {
                const Reading earlier = reading_of(normalize(recs[k - (rate + 999) / 1000]));
                EXPECT_LT(earlier.source_timestamp, r.source_timestamp);
            }
        }
    }
    auto fast = spec(Format::Csv, kMaxRateMilliHz + 1);
    EXPECT_THROW(validate(fast), std::invalid_argument);
}

TEST(Producer, ValuesStayPlausible) {
    auto s = spec(Format::Csv);
    s.parameter = Parameter::Humidity;
    s.value_model = ValueModel{95'000, 20'000, 5'000, 10, 3};
    for (std::uint64_t k = 0; k < 500; ++k) {
        auto v = model_value(s, k);
        EXPECT_GE(v, 0);
        EXPECT_LE(v, 100'000);
    }
}

TEST(Producer, CorruptRecordsAreDropped) {
    auto s = spec(Format::KeyValueText);
    s.corrupt_every = 5;
    auto recs = run_producer(s, 20, 0);
    int bad = 0;
    for (const auto& r : recs) bad += std::holds_alternative<ParseError>(normalize(r));
    EXPECT_EQ(bad, 4);
}

TEST(Scenario, ParsesDemoAndRejectsNonsense) {
    Scenario sc = parse_scenario(demo_text());
    EXPECT_EQ(sc.producers.size(), 4u);
    EXPECT_EQ(sc.attacks.size(), 4u);
    EXPECT_EQ(sc.producers[1].format, Format::JsonLines);
    EXPECT_EQ(sc.producers[0].value_model.amplitude, 3'250);

    for (const char* bad : {
             "messages = 5\n",
             "producer = a\n",
             "producer = a parameter=temperature rate=0\n",
             "producer = a parameter=temperature\nproducer = a parameter=pressure\n",
             "producer = a parameter=temperature\nattack = ReplayRequest target=zz\n",
             "producer = a parameter=temperature\nattack = ReplayRequest target=a after=25\n",
             "producer = a parameter=temperature\nattack = MutateReplicaStorage target=node-7\n",
             "producer = a parameter=temperature\nattack = Teleport target=a\n",
             "producer = a parameter=temperature\ngateway = http://x:1\n",
             "ledger = Not A Name\nproducer = a parameter=temperature\n",
             "producer = a parameter=temperature principal=magic:x\n",
         }) {
        EXPECT_THROW(parse_scenario(bad), std::invalid_argument) << bad;
    }
}

TEST(Scenario, Credentials) {
    auto d = parse_credential("derive:alice");
    EXPECT_EQ(d.principal_id, "alice");
    EXPECT_EQ(d.key->public_key(), SigningKey::derive("alice").public_key());
    auto t = parse_credential("token:svc:s3cret");
    EXPECT_EQ(t.principal_id, "svc");
    EXPECT_EQ(*t.token, "s3cret");
    auto s = parse_credential("seed:bob:" + std::string(64, '1'));
    EXPECT_EQ(s.principal_id, "bob");
    EXPECT_THROW(parse_credential("seed:bob:zz"), std::invalid_argument);
    EXPECT_THROW(parse_credential("alice"), std::invalid_argument);
}

TEST(HarnessRun, DemoDetectsEveryAttack) {
    TempDir dir;
    Scenario sc = parse_scenario(demo_text());
    auto d = make_sim_deployment(sc, dir.path());
    RunReport r = run_scenario(sc, *d);
    EXPECT_EQ(r.exit_code(), 0) << r.human_summary();
    EXPECT_EQ(r.attacks_injected, 4u);
    EXPECT_EQ(r.detected_total(), 4u);
    EXPECT_EQ(r.attacks_detected["GatewayAuth"], 2u);
    EXPECT_EQ(r.attacks_detected["ContractGuard"], 1u);
    EXPECT_EQ(r.attacks_detected["ReplicaAudit"], 1u);
    EXPECT_TRUE(r.undetected.empty());
    EXPECT_EQ(r.produced, 100u);
    EXPECT_TRUE(r.conserved());
    EXPECT_EQ(r.parse_dropped, 3u);
    EXPECT_EQ(r.rejected_total(), 1u);
    EXPECT_EQ(r.committed, 96u);
    EXPECT_EQ(r.receipts_verified, r.committed);
    EXPECT_TRUE(r.invariants["chain_replay"]);
    EXPECT_TRUE(r.invariants["mutated_replica_flagged"]);
}

TEST(HarnessRun, SameSeedSameCounters) {
    Scenario sc = parse_scenario(kQuiet);
    TempDir a, b;
    auto da = make_sim_deployment(sc, a.path());
    auto db = make_sim_deployment(sc, b.path());
    RunReport ra = run_scenario(sc, *da);
    RunReport rb = run_scenario(sc, *db);
    EXPECT_EQ(ra.counters(), rb.counters());
    EXPECT_EQ(ra.to_records(), rb.to_records());
}

TEST(HarnessRun, CleanRunPasses) {
    Scenario sc = parse_scenario(kQuiet);
    TempDir dir;
    auto d = make_sim_deployment(sc, dir.path());
    RunReport r = run_scenario(sc, *d);
    EXPECT_EQ(r.exit_code(), 0) << r.human_summary();
    EXPECT_EQ(r.committed, 12u);
    EXPECT_EQ(r.attacks_injected, 0u);
    EXPECT_TRUE(r.conserved());
    std::istringstream records(r.to_records());
    std::string last;
    for (std::string line; std::getline(records, line);) {
        json j = json::parse(line);
        EXPECT_TRUE(j.contains("record"));
        last = line;
    }
    EXPECT_EQ(json::parse(last)["record"], "summary");
}

TEST(HarnessRun, TamperedReceiptIsCaught) {
    Scenario sc = parse_scenario(kQuiet);
    TempDir dir;
    auto inner = make_sim_deployment(sc, dir.path());
    bool done = false;
    TamperingDeployment d(*inner, [&done](const gateway::HttpRequest& req, gateway::HttpResponse& resp) {
        if (!done && req.target.ends_with("/receipt") && resp.status == 200) {
            json j = json::parse(resp.body);
            std::string sig = j["header"]["leaderSignature"];
            sig[0] = sig[0] == '0' ? '1' : '0';
            j["header"]["leaderSignature"] = sig;
            resp.body = j.dump();
            done = true;
        }
    });
    RunReport r = run_scenario(sc, d);
    ASSERT_TRUE(done);
    EXPECT_EQ(r.exit_code(), 1);
    ASSERT_EQ(r.verification_failures.size(), 1u);
    EXPECT_EQ(r.verification_failures[0].site, DetectionSite::ReceiptVerify);
    EXPECT_EQ(r.receipts_verified, r.committed - 1);
}

TEST(HarnessRun, TamperedReadingsAreCaught) {
    Scenario sc = parse_scenario(kQuiet);
    TempDir dir;
    auto inner = make_sim_deployment(sc, dir.path());
    TamperingDeployment d(*inner, [](const gateway::HttpRequest& req, gateway::HttpResponse& resp) {
        if (req.target.ends_with("/contracts/b/readings") && resp.status == 200) {
            json j = json::parse(resp.body);
            j["readings"][2]["valueScaled"] = j["readings"][2]["valueScaled"].get<std::int64_t>() + 1;
            resp.body = j.dump();
        }
    });
    RunReport r = run_scenario(sc, d);
    EXPECT_EQ(r.exit_code(), 1);
    ASSERT_EQ(r.verification_failures.size(), 1u);
    EXPECT_EQ(r.verification_failures[0].subject, "contract b");
}

TEST(HarnessRun, UnreachableGatewayIsAnInfrastructureError) {
    std::string text = std::string(kQuiet) + "gateway = http://127.0.0.1:1\nleader_key = " + std::string(64, '0') + "\n";
    Scenario sc = parse_scenario(text);
    auto d = make_remote_deployment(sc);
    EXPECT_THROW(run_scenario(sc, *d), HarnessError);
}
