// SPDX-License-Identifier: Apache-2.0
#include "pipechain/audit/fixtures.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pipechain/contract.hpp"
#include "pipechain/ledger.hpp"

namespace pipechain::audit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::uint32_t kBlockSizes[] = {1, 2, 3, 5, 8, 13};

struct Builder {
    std::map<std::string, SigningKey> keys;
    std::map<std::string, std::uint64_t> nonces;

    const SigningKey& key(const std::string& who) {
        auto it = keys.find(who);
        if (it == keys.end()) it = keys.emplace(who, SigningKey::derive("fixture:" + who)).first;
        return it->second;
    }

    LedgerEntry entry(const std::string& who, const std::string& contract, Action action, Bytes payload) {
        LedgerEntry e;
        e.submitter_id = who;
        e.submitter_nonce = ++nonces[who];
        e.entry_id = derive_entry_id(who, e.submitter_nonce);
        e.contract_id = contract;
        e.action = action;
        e.payload = std::move(payload);
        e.sign(key(who));
        return e;
    }
};

/// Blocks of kBlockSizes entries: registrations first, then readings.
std::vector<Receipt> build_ledger(const fs::path& dir, const SigningKey& leader, std::size_t blocks) {
    fs::remove_all(dir);
    Builder b;
    auto clock = std::make_shared<std::uint64_t>(1'700'000'000);
    LedgerOptions opts;
    opts.dir = dir;
    opts.leader_key = leader.public_key();
    opts.key_lookup = [&b](std::string_view who) { return std::optional<PublicKey>(b.key(std::string(who)).public_key()); };
    opts.clock = [clock] { return (*clock)++; };
    Ledger ledger(std::move(opts), std::make_unique<ContractEngine>());
    ledger.init_genesis(leader);

    std::vector<LedgerEntry> first;
    for (int c = 0; c < 4; ++c) {
        first.push_back(b.entry("admin", "site-" + std::to_string(c), Action::RegisterSensor,
                                RegisterSensorPayload{"probe-" + std::to_string(c)}.encode()));
    }
    std::vector<Receipt> out;
    std::mt19937_64 rng(20230301);
    for (std::size_t i = 0; i < blocks; ++i) {
        std::vector<LedgerEntry> pending;
        if (i == 0) {
            pending.push_back(first[0]);
        } else if (i == 1) {
            pending.assign(first.begin() + 1, first.begin() + 3);
        } else {
            if (i == 2) pending.push_back(first[3]);
            while (pending.size() < kBlockSizes[i % std::size(kBlockSizes)]) {
                const int c = static_cast<int>(rng() % 4);
                auto value = static_cast<std::int64_t>(rng() % 80'000) - 20'000;
                static const Parameter params[] = {Parameter::Temperature, Parameter::Pressure, Parameter::Moisture,
                                                   Parameter::Humidity};
                pending.push_back(b.entry("probe-" + std::to_string(c), "site-" + std::to_string(c), Action::AddReading,
                                          ReadingPayload{params[c], value, "u" + std::to_string(c),
                                                         1'699'999'000 + rng() % 1000}
                                              .encode()));
            }
        }
        Block blk = ledger.append_block(pending, leader);
        for (std::uint32_t leaf = 0; leaf < blk.header.entry_count; ++leaf) {
            out.push_back(ledger.make_receipt(blk.header.height, leaf));
        }
    }
    return out;
}

std::string flip_hex(std::string hex, std::size_t pos) {
    char& c = hex[pos % hex.size()];
    c = c == '0' ? '1' : '0';
    return hex;
}

}  // namespace

const SigningKey& fixture_leader_key() {
    static const SigningKey k = SigningKey::derive("fixture:leader");
    return k;
}

std::vector<FixtureReceipt> build_receipt_corpus(const fs::path& scratch) {
    std::vector<Receipt> valid = build_ledger(scratch / "ledger", fixture_leader_key(), std::size(kBlockSizes));
    std::vector<Receipt> foreign = build_ledger(scratch / "foreign", SigningKey::derive("fixture:impostor"), 3);

    std::vector<FixtureReceipt> out;
    const PublicKey& key = fixture_leader_key().public_key();
    auto add = [&](const std::string& name, std::string wire) {
        out.push_back(FixtureReceipt{name, wire, verify_receipt_wire(wire, key)});
    };
    auto name = [](const char* kind, std::size_t i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s-%03zu", kind, i);
        return std::string(buf);
    };

    for (std::size_t i = 0; i < valid.size(); ++i) add(name("valid", i), receipt_to_json(valid[i]).dump());

    // Single-field mutations, rotating over the valid receipts.
    static const char* kHeaderHex[] = {"prevHash", "merkleRoot", "stateDigest", "leaderSignature"};
    static const char* kHeaderInt[] = {"height", "timestamp", "entryCount"};
    std::size_t n = 0;
    auto pick = [&]() -> json { return receipt_to_json(valid[(n++ * 7) % valid.size()]); };
    for (std::size_t i = 0; i < 8; ++i) {
        json j = pick();
        j["entryHash"] = flip_hex(j["entryHash"], i * 9);
        add(name("entry-hash", i), j.dump());
    }
    for (std::size_t i = 0, made = 0; made < 8 && i < 64; ++i) {
        json j = pick();
        if (j["auditPath"].empty()) continue;
        auto& step = j["auditPath"][i % j["auditPath"].size()];
        step["digest"] = flip_hex(step["digest"], i * 5);
        add(name("path-digest", made++), j.dump());
    }
    for (std::size_t i = 0, made = 0; made < 6 && i < 64; ++i) {
        json j = pick();
        if (j["auditPath"].empty()) continue;
        auto& step = j["auditPath"][i % j["auditPath"].size()];
        step["side"] = step["side"] == "Left" ? "Right" : "Left";
        add(name("path-side", made++), j.dump());
    }
    for (std::size_t i = 0; i < 6; ++i) {
        json j = pick();
        j["leafIndex"] = j["leafIndex"].get<std::uint32_t>() + 1 + i;
        add(name("leaf-index", i), j.dump());
    }
    for (std::size_t f = 0; f < std::size(kHeaderHex); ++f) {
        for (std::size_t i = 0; i < 4; ++i) {
            json j = pick();
            j["header"][kHeaderHex[f]] = flip_hex(j["header"][kHeaderHex[f]], i * 11 + f);
            add(name((std::string("header-") + kHeaderHex[f]).c_str(), i), j.dump());
        }
    }
    for (std::size_t f = 0; f < std::size(kHeaderInt); ++f) {
        for (std::size_t i = 0; i < 4; ++i) {
            json j = pick();
            j["header"][kHeaderInt[f]] = j["header"][kHeaderInt[f]].get<std::uint64_t>() + 1;
            add(name((std::string("header-") + kHeaderInt[f]).c_str(), i), j.dump());
        }
    }
    for (std::size_t i = 0; i < 4; ++i) {
        json j = pick();
        if (!j["auditPath"].empty()) j["auditPath"].erase(j["auditPath"].size() - 1);
        else j["auditPath"].push_back(json{{"digest", std::string(64, 'a')}, {"side", "Left"}});
        add(name("path-length", i), j.dump());
    }
    for (std::size_t i = 0; i < foreign.size() && i < 6; ++i) add(name("foreign-leader", i), receipt_to_json(foreign[i]).dump());

    // Malformed wire bytes.
    for (std::size_t i = 0; i < 6; ++i) {
        std::string w = receipt_to_json(valid[(i * 5) % valid.size()]).dump();
        add(name("truncated", i), w.substr(0, w.size() * (i + 1) / 8));
    }
    add(name("empty", 0), "");
    add(name("not-json", 0), "receipt");
    add(name("not-object", 0), "[1,2,3]");
    {
        json j = pick();
        j.erase("header");
        add(name("missing-field", 0), j.dump());
    }
    {
        json j = pick();
        j["entryHash"] = j["entryHash"].get<std::string>().substr(2);
        add(name("short-hex", 0), j.dump());
    }
    {
        json j = pick();
        std::string h = j["entryHash"];
        h[0] = 'g';
        j["entryHash"] = h;
        add(name("bad-hex", 0), j.dump());
    }
    {
        json j = pick();
        j["leafIndex"] = -1;
        add(name("negative-index", 0), j.dump());
    }
    {
        json j = pick();
        j["header"]["height"] = "7";
        add(name("string-height", 0), j.dump());
    }
    {
        json j = pick();
        if (!j["auditPath"].empty()) j["auditPath"][0]["side"] = "Middle";
        add(name("bad-side", 0), j.dump());
    }

    for (const auto& f : out) {
        const bool should_accept = f.name.starts_with("valid-");
        if (should_accept != (f.verdict == ReceiptVerdict::Accept)) {
            throw std::logic_error("fixture " + f.name + " got verdict " + std::string(verdict_name(f.verdict)));
        }
    }
    return out;
}

void write_receipt_corpus(const std::vector<FixtureReceipt>& corpus, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream verdicts(dir / "verdicts.txt");
    verdicts << "# <file> <verdict>; only Accept is a valid receipt. Leader key in leader.pub.\n";
    for (const auto& f : corpus) {
        std::ofstream(dir / (f.name + ".bin"), std::ios::binary) << f.wire;
        verdicts << f.name << ".bin " << verdict_name(f.verdict) << "\n";
    }
    save_public_key(dir / "leader.pub", fixture_leader_key().public_key());
}

std::vector<std::pair<std::string, std::string>> read_verdicts(const fs::path& dir) {
    std::ifstream in(dir / "verdicts.txt");
    if (!in) throw std::runtime_error("cannot read " + (dir / "verdicts.txt").string());
    std::vector<std::pair<std::string, std::string>> out;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string file, verdict;
        if (!(ls >> file >> verdict)) throw std::runtime_error("bad verdicts line: " + line);
        out.emplace_back(file, verdict);
    }
    return out;
}

}  // namespace pipechain::audit
