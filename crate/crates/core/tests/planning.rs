use regimelab::planning::{
    classify_episode, generate_tree, optimal_strategy, play_far, play_near, scripted_mean_payoff, Strategy,
    Structure, TreeConfig,
};

// Monte-Carlo oracle for the closed-form scripted payoffs: mean and standard error over fresh trees.
fn simulate(cfg: &TreeConfig, s: Structure, far: bool, n: u64) -> (f64, f64) {
    let xs: Vec<f64> = (0..n)
        .map(|i| {
            let tree = generate_tree(cfg, s, 0x5EED ^ (i * 0x9E37_79B9));
            if far { play_far(cfg, &tree) } else { play_near(cfg, &tree) }.unwrap().payoff
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[test]
fn scripted_payoffs_match_simulation() {
    let cfg = TreeConfig::default();
    for s in Structure::ALL {
        for (far, strat) in [(true, Strategy::FarSighted), (false, Strategy::NearSighted)] {
            let closed = scripted_mean_payoff(&cfg, s, strat);
            let (mean, se) = simulate(&cfg, s, far, 20_000);
            assert!((mean - closed).abs() < 4.0 * se, "{s} {strat:?}: {mean} vs {closed} (se {se})");
        }
    }
}

#[test]
fn optimum_follows_structure() {
    let cfg = TreeConfig::default();
    assert_eq!(optimal_strategy(&cfg, Structure::FarSighted).0, Strategy::FarSighted);
    assert_eq!(optimal_strategy(&cfg, Structure::NearSighted).0, Strategy::NearSighted);
    let far = scripted_mean_payoff(&cfg, Structure::Null, Strategy::FarSighted);
    let near = scripted_mean_payoff(&cfg, Structure::Null, Strategy::NearSighted);
    assert!((far - near).abs() < 0.05 * 2.7);
}

#[test]
fn scripted_episodes_carry_their_own_label() {
    let cfg = TreeConfig::default();
    for i in 0..50 {
        let tree = generate_tree(&cfg, Structure::Null, i);
        let far = play_far(&cfg, &tree).unwrap();
        let near = play_near(&cfg, &tree).unwrap();
        assert_eq!(classify_episode(&cfg, &far).label, Strategy::FarSighted);
        assert_eq!(classify_episode(&cfg, &near).label, Strategy::NearSighted);
    }
}
