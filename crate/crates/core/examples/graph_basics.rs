//! Building graphs, counting triangles and writing edge lists and DOT.
use copulagraph::graph::{Edge, Graph};

fn main() -> copulagraph::Result<()> {
    let mut g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2), (2, 3)])?;
    println!("{} edges out of {}", g.edge_count(), g.max_edges());

    let e = Edge::new(1, 3)?;
    println!("adding {e:?} closes {} triangle(s)", g.triangle_count(e));
    g.toggle(e)?;
    println!("triangles now: {}", g.triangles());
    println!("neighbours of 2: {:?}", g.neighbors(2));

    let text = g.to_edge_list();
    assert_eq!(Graph::parse_edge_list(5, &text)?, g);
    print!("{text}");
    println!("{}", g.to_dot(None, |_| None));
    Ok(())
}
