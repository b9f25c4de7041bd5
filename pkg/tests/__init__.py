import os


DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def data_path(*parts):
    return os.path.join(DATA_DIR, *parts)


def read_data(*parts):
    with open(data_path(*parts)) as f:
        return f.read()


CORRIDOR_START = (
    "(= (xloc hero) 3) (= (yloc hero) 1)"
    " (= (xloc gem1) 1) (= (yloc gem1) 1)"
    " (= (xloc gem2) 5) (= (yloc gem2) 1)"
)


def corridor():
    """The hallway bundle, its grounded environment and the starting state.

    The hero stands in the middle of a 1x5 hallway, two steps from a gem at
    either end, so every cost and likelihood can be worked out by hand.

    """
    from liras.domains import load_bundle
    from liras.world import state_from_init

    bundle = load_bundle(data_path("corridor"))
    env = bundle.ground_template()
    return bundle, env, state_from_init(env, CORRIDOR_START)
