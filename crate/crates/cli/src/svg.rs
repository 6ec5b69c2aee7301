//! Minimal trajectory plotter: one auto-fitted viewBox and two polylines,
//! the mate's track in black underneath and the vehicle's in red on top.
//! The y axis is flipped so the plot keeps the simulation's orientation.

use opportunist_core::sim::StepRecord;

fn polyline(points: &[(f64, f64)], stroke: &str, width: f64) -> String {
    let mut path = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            path.push(' ');
        }
        path.push_str(&format!("{x:.3},{:.3}", -y));
    }
    format!("<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width:.4}\" points=\"{path}\"/>")
}

/// Render a logged run as a standalone SVG document.
pub fn plot(records: &[StepRecord]) -> String {
    let vehicle: Vec<(f64, f64)> = records.iter().map(StepRecord::vehicle_position).collect();
    let mate: Vec<(f64, f64)> = records.iter().map(StepRecord::mate_position).collect();

    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for &(x, y) in vehicle.iter().chain(&mate) {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    if !min_x.is_finite() {
        (min_x, max_x, min_y, max_y) = (0.0, 1.0, 0.0, 1.0);
    }

    let extent = (max_x - min_x).max(max_y - min_y).max(1.0);
    let pad = extent * 0.05;
    let width = max_x - min_x + 2.0 * pad;
    let height = max_y - min_y + 2.0 * pad;
    let stroke = extent / 300.0;

    // The y flip maps [min_y, max_y] onto [-max_y, -min_y].
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.3} {:.3} {:.3} {:.3}\">\n{}\n{}\n</svg>\n",
        min_x - pad,
        -max_y - pad,
        width,
        height,
        polyline(&mate, "black", stroke),
        polyline(&vehicle, "red", stroke),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use opportunist_core::actuation::{OutputBits, WheelCommand};

    fn record(t: u64, x: f64, y: f64, mx: f64, my: f64) -> StepRecord {
        StepRecord {
            t,
            x,
            y,
            theta: 0.0,
            mate_x: mx,
            mate_y: my,
            vl: 0.0,
            vr: 0.0,
            bits: OutputBits::ZERO,
            cmd: WheelCommand::BOTH_UP,
        }
    }

    #[test]
    fn plot_holds_exactly_two_polylines_in_draw_order() {
        let records = vec![record(0, 0.0, 0.0, 5.0, 5.0), record(1, 1.0, 2.0, 4.0, 4.0)];
        let svg = plot(&records);
        assert_eq!(svg.matches("<polyline").count(), 2);
        let black = svg.find("stroke=\"black\"").expect("mate track present");
        let red = svg.find("stroke=\"red\"").expect("vehicle track present");
        assert!(black < red, "the vehicle draws on top of the mate");
        assert!(svg.starts_with("<svg xmlns="));
    }

    #[test]
    fn plot_flips_the_vertical_axis() {
        let records = vec![record(0, 0.0, 3.0, 0.0, 0.0), record(1, 0.0, 4.0, 0.0, 0.0)];
        let svg = plot(&records);
        assert!(svg.contains("0.000,-3.000 0.000,-4.000"), "svg: {svg}");
    }
}
