import { get } from '@ember/object';
import CheckSessionRoute from '../../check-session-route';
function service(user) {
	return {
		...user,
		userToken: get('currentUser.accessKey'),
		userSecret:  get('currentUser.userSecret'),
	};
}
const user = get('currentUser.user');
export default CheckSessionRoute.extend({
  currentUser: service(user),
});
