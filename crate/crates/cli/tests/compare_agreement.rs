use clearnet::commands::{run_command, Command, Flags};
use clearnet::generate::{gen_random_network, ChargeMode, GenOptions};
use clearnet::report::{Outcome, Report};

#[test]
fn methods_agree_on_seeded_scenarios() {
    let flags = Flags {
        max_n: 10,
        ..Flags::default()
    };
    let mut gaussian_runs = 0;
    let mut p2_compared = 0;
    for seed in 0..500u64 {
        let mut opts = GenOptions::new(
            1 + (seed % 10) as usize,
            0.2 + 0.8 * ((seed * 7 % 10) as f64) / 10.0,
            0.3 + 0.5 * ((seed % 3) as f64) / 2.0,
        );
        if seed % 4 == 3 {
            opts.charges = ChargeMode::Independent;
        }
        let scenario = gen_random_network(seed, &opts).unwrap();
        let Report::Compare(report) = run_command(Command::Compare, &scenario, &flags).unwrap()
        else {
            panic!("compare returns a comparison report");
        };
        assert!(report.agreement, "seed {seed}: {report:#?}");
        for m in &report.methods {
            if m.method == "gaussian" && matches!(m.outcome, Outcome::Ok { .. }) {
                gaussian_runs += 1;
            }
            if m.method == "milp-p2" && m.compared {
                p2_compared += 1;
            }
        }
    }
    assert!(gaussian_runs >= 350);
    assert!(p2_compared >= 450);
}
