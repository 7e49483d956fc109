//! Prints the labels found in each EPS file given on the command line.

fn main() {
    for path in std::env::args().skip(1) {
        let bytes = std::fs::read(&path).expect("readable file");
        match psforge::eps::parse_eps(&bytes) {
            Ok(doc) => {
                println!("{path}: bbox {}", doc.bounding_box());
                for t in doc.text_primitives() {
                    println!(
                        "  {:?} at ({:.3}, {:.3}) slope {:.3} size {:.3}",
                        t.text, t.anchor.x, t.anchor.y, t.slope_deg, t.font_size_pt
                    );
                }
                assert_eq!(doc.to_bytes(), bytes, "round trip");
            }
            Err(e) => println!("{path}: {e}"),
        }
    }
}
