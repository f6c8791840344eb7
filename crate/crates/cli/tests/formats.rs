use proptest::prelude::*;
use tempfile::TempDir;

use capsule_cli::config::parse_config;
use capsule_cli::svg::{render_svg, Plot};
use capsule_cli::table::{emit_csv, format_f64, read_csv, ResultTable};

#[test]
fn empty_table_is_header_only() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("empty.csv");
    let t = ResultTable::new(&["a", "b"]).with_provenance(&[("config_hash".into(), "00".into())]);
    emit_csv(&t, &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "# config_hash: 00\na,b\n"
    );
    assert!(read_csv(&path).unwrap().rows.is_empty());
}

#[test]
fn empty_plot_is_an_error() {
    assert!(render_svg(&Plot::default()).is_err());
}

proptest! {
    #[test]
    fn float_text_round_trips(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        prop_assert_eq!(format_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn normal_form_fixed_point(
        eps in 1e-4..0.5f64,
        omega in 0.1..5.0f64,
        amp in 1e-3..10.0f64,
        zeta in 0.0..2.0f64,
        theta in -3.0..3.0f64,
        t_end in 1.0..1e4f64,
    ) {
        let text = format!(
            "[nondim]\nepsilon = {eps:?}\nomega = {omega:?}\nA = {amp:?}\nzeta = {zeta:?}\nmu1 = 0.01\nmu2 = 0.02\n\n[initial]\ntheta = {theta:?}\n\n[integrator]\nt_end = {t_end:?}\n"
        );
        let cfg = parse_config(&text).unwrap();
        let once = cfg.to_normal_form();
        let back = parse_config(&once).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_normal_form(), once);
    }
}
