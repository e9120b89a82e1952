// Prints the exact moment relations of the four transfer-map families.

use finite_rmt::coeffring::{int, RenderFormat};
use finite_rmt::transfer::{
    emit_formula, gauss_sum, selfadjoint_product, selfadjoint_sum, wishart_product, FormulaStyle, TransferMap,
};

fn render(map: &TransferMap, format: RenderFormat) -> String {
    emit_formula(map, FormulaStyle::default_for(map.kind(), format))
}

pub fn run_example() -> finite_rmt::Result<Vec<(String, String)>> {
    Ok(vec![
        ("wishart product, P = 3".into(), render(&wishart_product(3)?, RenderFormat::Plain)),
        ("gaussian sum, P = 4".into(), render(&gauss_sum(4, &int(1))?, RenderFormat::Plain)),
        ("selfadjoint product, P = 4".into(), render(&selfadjoint_product(4)?, RenderFormat::Plain)),
        ("selfadjoint sum, P = 4".into(), render(&selfadjoint_sum(4, &int(1))?, RenderFormat::Plain)),
        ("wishart product, P = 2 (LaTeX)".into(), render(&wishart_product(2)?, RenderFormat::Latex)),
    ])
}

fn main() -> finite_rmt::Result<()> {
    for (title, text) in run_example()? {
        println!("## {title}\n{text}");
    }
    Ok(())
}
