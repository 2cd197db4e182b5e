//! Prints the FILTER text for circle unions and intersections and compares
//! the planar test with great-circle distance for a few points.

use forestqb::compiler::render_geo;
use forestqb::model::{GeoCircle, GeoCombinator, GeoFilterSet};

fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + lat1.to_radians().cos() * lat2.to_radians().cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6_371_000.0 * a.sqrt().asin()
}

fn planar(c: &GeoCircle, lat: f64, lon: f64) -> f64 {
    let k = 6_371_000.0 * std::f64::consts::PI / 180.0;
    let dy = (lat - c.center_lat_deg) * k;
    let dx = (lon - c.center_lon_deg) * k * (c.center_lat_deg.to_radians()).cos();
    (dx * dx + dy * dy).sqrt()
}

fn main() {
    let circles = vec![GeoCircle::new(5.25, 117.75, 10_000.0), GeoCircle::new(5.3, 117.8, 8_000.0)];
    for combinator in [GeoCombinator::Union, GeoCombinator::Intersection] {
        let set = GeoFilterSet {
            circles: circles.clone(),
            combinator,
        };
        println!("{combinator:?}:\n  FILTER({})\n", render_geo(&set, "lat", "lon").unwrap());
    }
    let c = &circles[0];
    println!("{:>10} {:>10} {:>12} {:>12}", "lat", "lon", "planar m", "haversine m");
    for (lat, lon) in [(5.3, 117.8), (5.33, 117.75), (5.25, 117.84), (65.0, 20.0)] {
        println!("{lat:>10} {lon:>10} {:>12.1} {:>12.1}", planar(c, lat, lon), haversine(c.center_lat_deg, c.center_lon_deg, lat, lon));
    }
}
