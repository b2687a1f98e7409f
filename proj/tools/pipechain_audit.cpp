// SPDX-License-Identifier: Apache-2.0
// pipechain-audit: offline checks of ledger directories, receipts and replicas.

#include <iostream>

#include "CLI11.hpp"
#include "pipechain/audit/audit.hpp"

using namespace pipechain;
using namespace pipechain::audit;

int main(int argc, char** argv) {
    CLI::App app{"Offline auditor for pipechain ledgers"};
    app.require_subcommand(1);
    std::string format = "text";
    app.add_option("--format", format, "Output: text or records")->check(CLI::IsMember({"text", "records"}));

    std::string data_dir, key, receipt, nodes, range = "0..0", ledger;

    auto* chain = app.add_subcommand("verify-chain", "Verify every block of a ledger directory");
    chain->add_option("--data-dir", data_dir, "Ledger directory")->required();
    chain->add_option("--key", key, "Leader public key file")->required();

    auto* rcpt = app.add_subcommand("verify-receipt", "Verify a receipt offline");
    rcpt->add_option("receipt,--receipt", receipt, "Receipt file (JSON wire form)")->required();
    rcpt->add_option("--key", key, "Leader public key file")->required();

    auto* replay = app.add_subcommand("replay", "Replay contracts from genesis and dump the final store");
    replay->add_option("--data-dir", data_dir, "Ledger directory")->required();
    replay->add_option("--key", key, "Leader public key file")->required();

    auto* aud = app.add_subcommand("audit", "Compare stored blocks across replicas");
    aud->add_option("--nodes", nodes, "Comma separated [id=]host:port list")->required();
    aud->add_option("--ledger", ledger, "Ledger name")->required();
    aud->add_option("--range", range, "Heights <from>..<to>");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        AuditCommandResult r;
        if (*chain) {
            r = cmd_verify_chain(data_dir, load_key_argument(key));
        } else if (*rcpt) {
            r = cmd_verify_receipt(receipt, load_key_argument(key));
        } else if (*replay) {
            r = cmd_replay(data_dir, load_key_argument(key));
        } else {
            auto [from, to] = parse_range(range);
            r = cmd_audit(parse_node_list(nodes), ledger, from, to);
        }
        std::cout << (format == "records" ? r.to_records() : r.text);
        return r.exit_code();
    } catch (const AuditInputError& e) {
        std::cerr << "pipechain-audit: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "pipechain-audit: " << e.what() << "\n";
        return 2;
    }
}
