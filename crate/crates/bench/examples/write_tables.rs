//! Write the synthetic tables as CSV files.
//!
//! `cargo run -p smutf-bench --example write_tables -- OUT_DIR [ROWS] [SEED]`

use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().expect("usage: write_tables OUT_DIR [ROWS] [SEED]"));
    let rows = args.next().map_or(240, |a| a.parse().expect("ROWS"));
    let seed = args.next().map_or(7, |a| a.parse().expect("SEED"));
    std::fs::create_dir_all(&dir).expect("create output directory");
    for table in smutf_bench::all_tables(rows, seed) {
        let path = dir.join(format!("{}.csv", table.name));
        table.write_csv(&path).expect("write table");
        println!("{}", path.display());
    }
}
